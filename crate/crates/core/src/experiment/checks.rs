use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::engine::{Engine, HybridConfig};
use crate::euler::{euler_orient, extend_cluster, network_decomposition, power_graph, random_eulerian_instance};
use crate::graph::{dijkstra_oracle, hop_distances_from, log2_ceil, NodeId, WeightedGraph};
use crate::kssp::{pipeline_skeleton, random_sources, token_dissemination, token_message_bits, SkeletonSssp, Token};
use crate::rng::{derived_rng, stream};
use crate::scheduler::{assign_algorithms, run_scheduled, run_standalone};
use crate::skeleton::{compute_helper_sets, SkeletonGraph, C_HELP};

use super::ExperimentConfig;
use crate::error::ExperimentError;

/// Cluster diameter and color budgets of the decomposition check, in units
/// of `ceil(log2 n)`.
pub const DECOMPOSITION_C: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Euler,
    Decomposition,
    Skeleton,
    Helpers,
    Schedule,
    Tokens,
    Stretch,
    Bandwidth,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Euler,
        Check::Decomposition,
        Check::Skeleton,
        Check::Helpers,
        Check::Schedule,
        Check::Tokens,
        Check::Stretch,
        Check::Bandwidth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Euler => "euler",
            Check::Decomposition => "decomposition",
            Check::Skeleton => "skeleton",
            Check::Helpers => "helpers",
            Check::Schedule => "schedule",
            Check::Tokens => "tokens",
            Check::Stretch => "stretch",
            Check::Bandwidth => "bandwidth",
        }
    }

    /// Checks that read the pipeline run instead of doing their own work.
    pub fn uses_pipeline(self) -> bool {
        matches!(self, Check::Stretch | Check::Bandwidth)
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check {s:?} (one of {})", Check::ALL.map(Check::name).join(", ")))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(check: Check, pass: bool, detail: String) -> Self {
        CheckOutcome { check, pass, detail }
    }
}

fn engine<'g>(g: &'g WeightedGraph, cfg: &ExperimentConfig, seed: u64) -> Engine<'g> {
    Engine::new(g, HybridConfig { seed, ..cfg.hybrid })
}

/// Runs one of the standalone invariant suites on `g`.
pub fn run_check(check: Check, cfg: &ExperimentConfig, g: &WeightedGraph, seed: u64) -> Result<CheckOutcome, ExperimentError> {
    match check {
        Check::Euler => euler_check(cfg, g, seed),
        Check::Decomposition => Ok(decomposition_check(g, seed)),
        Check::Skeleton => {
            let mut e = engine(g, cfg, seed);
            let s = pipeline_skeleton(&mut e, cfg.k(), &[], &cfg.pipeline_config(seed))?;
            Ok(skeleton_check(g, &s))
        }
        Check::Helpers => helpers_check(cfg, g, seed),
        Check::Schedule => schedule_check(cfg, g, seed),
        Check::Tokens => tokens_check(cfg, g, seed),
        Check::Stretch | Check::Bandwidth => {
            Err(ExperimentError::Invalid(format!("check {check} reads a pipeline run")))
        }
    }
}

/// Balanced orientation of a random Eulerian subgraph with up to
/// `ceil(log2 n)^2` virtual nodes.
fn euler_check(cfg: &ExperimentConfig, g: &WeightedGraph, seed: u64) -> Result<CheckOutcome, ExperimentError> {
    let n = g.node_count();
    let log = log2_ceil(n) as u64;
    let virt = (seed % (log * log + 1)) as usize;
    let inst = random_eulerian_instance(g, virt, n / 2, seed);
    let mut e = engine(g, cfg, seed);
    let rep = euler_orient(&mut e, &inst)?;
    let nodes = inst.node_count();
    let pass = rep.orientation.is_complete() && rep.orientation.is_balanced(nodes);
    let bad = rep.orientation.degrees(nodes).iter().filter(|(i, o)| i != o).count();
    Ok(CheckOutcome::new(
        Check::Euler,
        pass,
        format!("{} edges, {virt} virtual nodes, {bad} unbalanced, {} rounds", inst.edges.len(), e.ledger().rounds()),
    ))
}

/// Decomposition of G²: proper coloring, weak diameters, color count, and
/// disjoint same-color extended clusters.
pub fn decomposition_check(g: &WeightedGraph, seed: u64) -> CheckOutcome {
    let g2 = power_graph(g);
    let d = network_decomposition(&g2, seed);
    let log = log2_ceil(g.node_count()) as usize;
    let mut problems = Vec::new();
    let clash = g2.edges().iter().any(|e| {
        let (a, b) = (d.cluster_of[e.u.index()], d.cluster_of[e.v.index()]);
        a != b && d.cluster_color[a] == d.cluster_color[b]
    });
    if clash {
        problems.push("adjacent clusters share a color".to_string());
    }
    let mut diameter = 0;
    for members in &d.clusters {
        for &v in members {
            let hops = hop_distances_from(&g2, v);
            diameter = members.iter().map(|u| hops[u.index()]).fold(diameter, u32::max);
        }
    }
    if diameter as usize > DECOMPOSITION_C * log {
        problems.push(format!("cluster diameter {diameter}"));
    }
    if d.colors > DECOMPOSITION_C * log {
        problems.push(format!("{} colors", d.colors));
    }
    for color in 0..d.colors {
        let exts: Vec<_> = d.clusters_of_color(color).iter().map(|c| extend_cluster(c, g)).collect();
        let overlap = (0..exts.len()).any(|i| (i + 1..exts.len()).any(|j| !exts[i].is_disjoint(&exts[j])));
        if overlap {
            problems.push(format!("extended clusters of color {color} overlap"));
        }
    }
    CheckOutcome::new(
        Check::Decomposition,
        problems.is_empty(),
        format!(
            "{} clusters, {} colors, diameter {diameter}{}",
            d.clusters.len(),
            d.colors,
            problems.iter().map(|p| format!("; {p}")).collect::<String>()
        ),
    )
}

/// Skeleton distances against Dijkstra on G for every skeleton pair.
pub fn skeleton_check(g: &WeightedGraph, s: &SkeletonGraph) -> CheckOutcome {
    let mut bad = 0;
    for &u in s.nodes() {
        let truth = dijkstra_oracle(g, u).expect("skeleton node in graph");
        let ds = s.distances_from(u);
        bad += s.nodes().iter().zip(&ds).filter(|(v, d)| **d != truth.get(**v)).count();
    }
    CheckOutcome::new(
        Check::Skeleton,
        bad == 0,
        format!("{} nodes, {} edges, h = {}, {bad} mismatched pairs", s.len(), s.edges().len(), s.h),
    )
}

fn helpers_check(cfg: &ExperimentConfig, g: &WeightedGraph, seed: u64) -> Result<CheckOutcome, ExperimentError> {
    let mut e = engine(g, cfg, seed);
    let pc = cfg.pipeline_config(seed);
    let s = pipeline_skeleton(&mut e, cfg.k(), &[], &pc)?;
    let x = pc.spacing(&e, cfg.k());
    let fam = compute_helper_sets(&mut e, s.nodes(), x)?;
    let cap = C_HELP * log2_ceil(g.node_count()) as usize;
    let mut count = vec![0usize; g.node_count()];
    let mut problems = 0;
    for &w in s.nodes() {
        let Some(set) = fam.get(w) else {
            problems += 1;
            continue;
        };
        let hops = hop_distances_from(g, w);
        if set.len() < fam.mu || set.iter().any(|v| hops[v.index()] as usize > fam.mu) {
            problems += 1;
        }
        for v in set {
            count[v.index()] += 1;
        }
    }
    let overlap = count.iter().copied().max().unwrap_or(0);
    Ok(CheckOutcome::new(
        Check::Helpers,
        problems == 0 && overlap <= cap,
        format!("{} sets of size >= {}, overlap {overlap} (cap {cap}), {problems} bad sets", s.len(), fam.mu),
    ))
}

/// `k` SSSP instances from skeleton nodes, scheduled through helpers and
/// compared state for state with standalone runs.
fn schedule_check(cfg: &ExperimentConfig, g: &WeightedGraph, seed: u64) -> Result<CheckOutcome, ExperimentError> {
    let k = cfg.k();
    let mut e = engine(g, cfg, seed);
    let pc = cfg.pipeline_config(seed);
    let s = pipeline_skeleton(&mut e, k, &[], &pc)?;
    let x = pc.spacing(&e, k);
    let fam = compute_helper_sets(&mut e, s.nodes(), x)?;
    let mut rng = derived_rng(seed, &[stream::SOURCES]);
    let sources: Vec<NodeId> = (0..k).map(|_| s.nodes()[rand::Rng::gen_range(&mut rng, 0..s.len())]).collect();
    let algs: Vec<SkeletonSssp> = sources.iter().map(|&u| cfg.engine.algorithm(u, &s)).collect();
    let map_err = |err| ExperimentError::Kssp(crate::error::KsspError::Schedule(err));
    let assignment = assign_algorithms(&s, &fam, k).map_err(map_err)?;
    let run = run_scheduled(&mut e, &s, &assignment, &algs).map_err(map_err)?;
    let mut differing = 0;
    for (a, alg) in algs.iter().enumerate() {
        if run_standalone(&s, alg).map_err(map_err)?.states != run.states[a] {
            differing += 1;
        }
    }
    Ok(CheckOutcome::new(
        Check::Schedule,
        differing == 0,
        format!("{k} instances, {} simulated rounds, {differing} differ from standalone", run.simulated_rounds),
    ))
}

/// Largest per-instance token load allowed for `k` tokens over `y`
/// instances: `4 * (k / y) * ceil(log2 n)`.
pub fn token_load_bound(k: usize, y: usize, n: usize) -> f64 {
    4.0 * k as f64 / y as f64 * log2_ceil(n) as f64
}

fn tokens_check(cfg: &ExperimentConfig, g: &WeightedGraph, seed: u64) -> Result<CheckOutcome, ExperimentError> {
    let n = g.node_count();
    let k = cfg.k();
    let mut rng = derived_rng(seed, &[stream::TOKENS, 1]);
    let tokens: Vec<Token> = random_sources(n, k, seed)
        .into_iter()
        .map(|s| {
            let proxy = rand::Rng::gen_range(&mut rng, 1..=n as u64);
            let offset = rand::Rng::gen_range(&mut rng, 0..=g.max_weight() * n as u64);
            Token { holder: s, words: vec![s.0 as u64, proxy, offset] }
        })
        .collect();
    let mut e = engine(g, cfg, seed);
    let y = (e.limits().gamma / token_message_bits(&e, &tokens, 1)).max(1) as usize;
    let rep = token_dissemination(&mut e, &tokens, y, seed).map_err(crate::error::KsspError::from)?;
    let bound = token_load_bound(k, y, n);
    Ok(CheckOutcome::new(
        Check::Tokens,
        rep.complete(k) && rep.max_load() as f64 <= bound,
        format!("{k} tokens over {y} instances, max load {} (bound {bound}), {} rounds", rep.max_load(), rep.rounds),
    ))
}
