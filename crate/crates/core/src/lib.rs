//! Simulator for the HYBRID(λ, γ) network model and a skeleton-based
//! k-source shortest paths stack built on top of it.
//!
//! Layers, bottom up:
//! - [`graph`]: weighted graphs, generators, exact oracles.
//! - [`engine`]: round-synchronous execution with bandwidth caps and a
//!   round ledger.
//! - [`minor`]: contraction / consensus / aggregation rounds simulated on
//!   the engine.
//! - [`euler`]: Eulerian orientation via network decomposition of G².
//! - [`skeleton`]: skeleton graphs and helper sets.
//! - [`scheduler`]: running many skeleton algorithms at once through helpers.
//! - [`kssp`]: the k-SSP pipelines.
//! - [`experiment`]: configuration, reports and scaling tables.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod euler;
pub mod graph;
pub mod kssp;
pub mod minor;
pub mod rng;
pub mod scheduler;
pub mod skeleton;

pub use error::*;
