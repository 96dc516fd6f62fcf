use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::WeightedGraph;
use crate::error::GraphError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphKind {
    Path,
    Cycle,
    /// `rows * cols` must equal `n`.
    Grid { rows: usize, cols: usize },
    /// Random spanning tree plus every other pair with probability `p`.
    RandomConnected { p: f64 },
    /// Points in the unit square joined within `radius`, plus a Euclidean
    /// minimum spanning tree.
    RandomGeometric { radius: f64 },
}

/// Inclusive integer weight range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRange {
    pub lo: u64,
    pub hi: u64,
}

impl WeightRange {
    pub const UNIT: WeightRange = WeightRange { lo: 1, hi: 1 };

    /// `[1, n^2]`.
    pub fn default_for(n: usize) -> Self {
        WeightRange { lo: 1, hi: (n as u64).saturating_mul(n as u64).max(1) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub n: usize,
    /// `None` selects `[1, n^2]`.
    pub weights: Option<WeightRange>,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, n: usize, seed: u64) -> Self {
        GraphSpec { kind, n, weights: None, seed }
    }

    pub fn grid(rows: usize, cols: usize, seed: u64) -> Self {
        GraphSpec::new(GraphKind::Grid { rows, cols }, rows * cols, seed)
    }

    pub fn with_weights(mut self, weights: WeightRange) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn weight_range(&self) -> WeightRange {
        self.weights.unwrap_or_else(|| WeightRange::default_for(self.n))
    }
}

/// Builds the graph described by `spec`. Identical specs yield identical
/// graphs.
pub fn generate_graph(spec: &GraphSpec) -> Result<WeightedGraph, GraphError> {
    let n = spec.n;
    if n < 2 {
        return Err(GraphError::TooFewNodes(n));
    }
    let range = spec.weight_range();
    if range.lo == 0 || range.lo > range.hi {
        return Err(GraphError::EmptyWeightRange { lo: range.lo, hi: range.hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs: Vec<(u32, u32)> = match spec.kind {
        GraphKind::Path => (1..n as u32).map(|i| (i, i + 1)).collect(),
        GraphKind::Cycle => {
            if n < 3 {
                return Err(GraphError::InvalidSpec("a cycle needs at least 3 nodes".into()));
            }
            let mut p: Vec<_> = (1..n as u32).map(|i| (i, i + 1)).collect();
            p.push((n as u32, 1));
            p
        }
        GraphKind::Grid { rows, cols } => {
            if rows * cols != n || rows == 0 || cols == 0 {
                return Err(GraphError::InvalidSpec(format!("grid {rows}x{cols} does not have {n} nodes")));
            }
            let id = |r: usize, c: usize| (r * cols + c + 1) as u32;
            let mut p = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        p.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        p.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            p
        }
        GraphKind::RandomConnected { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidSpec(format!("edge probability {p} outside [0, 1]")));
            }
            random_connected(n, p, &mut rng)
        }
        GraphKind::RandomGeometric { radius } => {
            if !(radius > 0.0) {
                return Err(GraphError::InvalidSpec(format!("radius {radius} must be positive")));
            }
            random_geometric(n, radius, &mut rng)
        }
    };
    let triples: Vec<(u32, u32, u64)> = pairs
        .into_iter()
        .map(|(u, v)| (u, v, rng.gen_range(range.lo..=range.hi)))
        .collect();
    WeightedGraph::new(n, range.hi, &triples)
}

fn random_connected(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let mut order: Vec<u32> = (1..=n as u32).collect();
    order.shuffle(rng);
    let mut present = std::collections::BTreeSet::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let child = order[i];
        present.insert((parent.min(child), parent.max(child)));
    }
    for u in 1..=n as u32 {
        for v in u + 1..=n as u32 {
            if rng.gen_bool(p) {
                present.insert((u, v));
            }
        }
    }
    present.into_iter().collect()
}

fn random_geometric(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let dist2 = |a: usize, b: usize| {
        let dx = points[a].0 - points[b].0;
        let dy = points[a].1 - points[b].1;
        dx * dx + dy * dy
    };
    let mut present = std::collections::BTreeSet::new();
    // Prim's algorithm for the Euclidean MST.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    in_tree[0] = true;
    for v in 1..n {
        best[v] = (dist2(0, v), 0);
    }
    for _ in 1..n {
        let (next, _) = (0..n)
            .filter(|&v| !in_tree[v])
            .map(|v| (v, best[v].0))
            .fold((usize::MAX, f64::INFINITY), |acc, (v, d)| if d < acc.1 { (v, d) } else { acc });
        in_tree[next] = true;
        let parent = best[next].1;
        present.insert(((parent.min(next) + 1) as u32, (parent.max(next) + 1) as u32));
        for v in 0..n {
            if !in_tree[v] {
                let d = dist2(next, v);
                if d < best[v].0 {
                    best[v] = (d, next);
                }
            }
        }
    }
    let r2 = radius * radius;
    for a in 0..n {
        for b in a + 1..n {
            if dist2(a, b) <= r2 {
                present.insert(((a + 1) as u32, (b + 1) as u32));
            }
        }
    }
    present.into_iter().collect()
}
