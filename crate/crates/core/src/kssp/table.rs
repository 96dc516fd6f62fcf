use std::io::Write;

use serde::Serialize;

use crate::graph::{dijkstra_oracle, Dist, NodeId, WeightedGraph};

/// Declared approximation factor of a table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stretch {
    pub alpha: f64,
    /// Human-readable form such as `1`, `1+0.25` or `3+0.75`.
    pub label: String,
}

impl Stretch {
    pub fn new(base: u32, eps: f64) -> Self {
        let label = if eps == 0.0 { base.to_string() } else { format!("{base}+{eps}") };
        Stretch { alpha: base as f64 + eps, label }
    }
}

/// `d̃(v, s)` for every node `v` and source `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    sources: Vec<NodeId>,
    /// `rows[v][j]` is the estimate from node `v` to `sources[j]`.
    rows: Vec<Vec<Dist>>,
    pub stretch: Stretch,
    /// Set when the random-source pipeline fell back to arbitrary sources.
    pub delegated: bool,
}

impl DistanceTable {
    pub fn new(sources: Vec<NodeId>, rows: Vec<Vec<Dist>>, stretch: Stretch) -> Self {
        DistanceTable { sources, rows, stretch, delegated: false }
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, v: NodeId, source_index: usize) -> Dist {
        self.rows[v.index()][source_index]
    }

    pub fn row(&self, v: NodeId) -> &[Dist] {
        &self.rows[v.index()]
    }

    /// CSV with header `v,s,dist,stretch_bound`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["v", "s", "dist", "stretch_bound"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for (s, d) in self.sources.iter().zip(row) {
                w.write_record([
                    NodeId::from_index(i).to_string(),
                    s.to_string(),
                    d.to_string(),
                    self.stretch.label.clone(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Comparison of a table with exact distances.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TableCheck {
    pub pairs: usize,
    /// Largest `d̃ / d` over pairs with `d > 0`.
    pub max_ratio: f64,
    /// Mean `d̃ / d` over the same pairs.
    pub mean_ratio: f64,
    /// Pairs with an estimate below the true distance.
    pub underestimates: usize,
    /// Pairs above the declared stretch.
    pub over_stretch: usize,
    pub exact: bool,
}

impl TableCheck {
    pub fn sound(&self) -> bool {
        self.underestimates == 0 && self.over_stretch == 0
    }
}

/// Checks every entry against Dijkstra from each source.
pub fn check_table(g: &WeightedGraph, table: &DistanceTable) -> TableCheck {
    let mut check = TableCheck { exact: true, max_ratio: 1.0, ..TableCheck::default() };
    let alpha = table.stretch.alpha;
    let (mut sum, mut counted) = (0.0, 0usize);
    for (j, &s) in table.sources.iter().enumerate() {
        let truth = dijkstra_oracle(g, s).expect("source in graph");
        for v in g.nodes() {
            check.pairs += 1;
            let (d, est) = (truth.get(v), table.get(v, j));
            if est != d {
                check.exact = false;
            }
            if est < d {
                check.underestimates += 1;
            }
            match (d, est) {
                (Dist::Finite(d), Dist::Finite(e)) if d > 0 => {
                    let ratio = e as f64 / d as f64;
                    check.max_ratio = check.max_ratio.max(ratio);
                    sum += ratio;
                    counted += 1;
                    if e as f64 > alpha * d as f64 + 1e-9 {
                        check.over_stretch += 1;
                    }
                }
                (Dist::Finite(0), Dist::Finite(e)) if e > 0 => check.over_stretch += 1,
                (Dist::Finite(_), Dist::Infinite) => check.over_stretch += 1,
                _ => {}
            }
        }
    }
    check.mean_ratio = if counted == 0 { 1.0 } else { sum / counted as f64 };
    check
}
