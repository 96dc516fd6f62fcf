use std::collections::BTreeMap;

use log::warn;

use crate::engine::Engine;
use crate::error::SkeletonError;
use crate::graph::{log2_ceil, NodeId, WeightedGraph};

/// `μ = C_MU * x * ceil(log2 n)`.
pub const C_MU: f64 = 2.0;
/// A node joins at most `C_HELP * ceil(log2 n)` helper sets.
pub const C_HELP: usize = 8;

/// Helper set `H_w` for every `w ∈ W`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperFamily {
    pub sets: BTreeMap<NodeId, Vec<NodeId>>,
    /// Required size and allowed hop radius (possibly reduced to `n`).
    pub mu: usize,
    /// Largest number of sets any node belongs to.
    pub max_overlap: usize,
    /// Largest hop distance from any `w` to a member of `H_w`.
    pub max_radius: u32,
}

impl HelperFamily {
    pub fn get(&self, w: NodeId) -> Option<&[NodeId]> {
        self.sets.get(&w).map(Vec::as_slice)
    }

    /// Size of the smallest helper set.
    pub fn min_size(&self) -> usize {
        self.sets.values().map(Vec::len).min().unwrap_or(0)
    }
}

/// Ball growing from each `w` in id order: nodes are visited in BFS order
/// (hop, then id) and admitted while they belong to fewer than
/// `C_HELP * ceil(log2 n)` sets, until `μ` members are collected.
/// Charged `2 * (max radius + 1)` rounds in phase "helpers".
pub fn compute_helper_sets(engine: &mut Engine<'_>, w_set: &[NodeId], x: f64) -> Result<HelperFamily, SkeletonError> {
    let g = engine.graph();
    let n = g.node_count();
    let log = log2_ceil(n) as usize;
    let mut mu = (C_MU * x * log as f64).ceil() as usize;
    if mu > n {
        warn!("helper size {mu} exceeds n = {n}; using {n}");
        mu = n;
    }
    let cap = C_HELP * log;
    let mut count = vec![0usize; n];
    let mut ws = w_set.to_vec();
    ws.sort_unstable();
    ws.dedup();
    let mut sets = BTreeMap::new();
    let mut max_radius = 0;
    for &w in &ws {
        let (members, radius) = grow(g, w, mu, cap, &count);
        if members.len() < mu || radius as usize > mu {
            return Err(SkeletonError::HelperShortfall { node: w, size: members.len(), mu });
        }
        for &v in &members {
            count[v.index()] += 1;
        }
        max_radius = max_radius.max(radius);
        sets.insert(w, members);
    }
    let max_overlap = count.into_iter().max().unwrap_or(0);
    let outer = engine.set_phase("helpers");
    if !ws.is_empty() {
        engine.charge(2 * (max_radius as u64 + 1));
    }
    engine.set_phase(&outer);
    Ok(HelperFamily { sets, mu, max_overlap, max_radius })
}

fn grow(g: &WeightedGraph, w: NodeId, mu: usize, cap: usize, count: &[usize]) -> (Vec<NodeId>, u32) {
    let mut hops = vec![u32::MAX; g.node_count()];
    hops[w.index()] = 0;
    let mut layer = vec![w];
    let mut members = Vec::new();
    let mut radius = 0;
    while !layer.is_empty() && members.len() < mu {
        layer.sort_unstable();
        let mut next = Vec::new();
        for &v in &layer {
            if members.len() < mu && count[v.index()] < cap {
                members.push(v);
                radius = hops[v.index()];
            }
            for a in g.neighbors(v) {
                if hops[a.node.index()] == u32::MAX {
                    hops[a.node.index()] = hops[v.index()] + 1;
                    next.push(a.node);
                }
            }
        }
        layer = next;
    }
    members.sort_unstable();
    (members, radius)
}
