//! Skeleton graphs (sampled nodes joined by h-hop-limited distances) and
//! helper sets.

mod cover;
mod helpers;

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::Rng;

pub use cover::check_path_cover;
pub use helpers::{compute_helper_sets, HelperFamily, C_HELP, C_MU};

use crate::engine::{Context, Engine, NodeProgram, Payload};
use crate::error::SkeletonError;
use crate::graph::{bit_length, Dist, NodeId, WeightedGraph};
use crate::rng::{derived_rng, stream};

/// Default constant in `h = C_H * x * ceil(ln n)`.
pub const C_H: f64 = 4.0;

/// `ceil(c_h * x * ceil(ln n))`, at least 1.
pub fn hop_radius(c_h: f64, x: f64, n: usize) -> u32 {
    let ln = (n.max(2) as f64).ln().ceil();
    ((c_h * x * ln).ceil() as u32).max(1)
}

/// Includes each node independently with probability `p`.
pub fn sample_skeleton(n: usize, p: f64, seed: u64) -> Result<Vec<NodeId>, SkeletonError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SkeletonError::BadProbability(p));
    }
    let mut rng = derived_rng(seed, &[stream::SKELETON]);
    Ok((0..n).filter(|_| rng.gen_bool(p)).map(NodeId::from_index).collect())
}

/// Skeleton nodes, their h-hop-limited distances, and what every graph
/// node learned about nearby skeleton nodes during construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkeletonGraph {
    pub h: u32,
    nodes: Vec<NodeId>,
    index_of: Vec<Option<usize>>,
    /// `(u, v, d_{h,G}(u, v))` with `u < v`.
    edges: Vec<(NodeId, NodeId, u64)>,
    adjacency: Vec<Vec<(NodeId, u64)>>,
    /// Per graph node: `(skeleton node, d_{h,G})` for skeleton nodes within
    /// `h` hops, sorted by id.
    known: Vec<Vec<(NodeId, u64)>>,
}

impl SkeletonGraph {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.index_of.get(v.index()).is_some_and(Option::is_some)
    }

    /// Position of `v` in [`SkeletonGraph::nodes`].
    pub fn index_of(&self, v: NodeId) -> Option<usize> {
        self.index_of.get(v.index()).copied().flatten()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId, u64)] {
        &self.edges
    }

    /// Skeleton neighbors of skeleton node `v`, sorted by id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, u64)] {
        match self.index_of(v) {
            Some(i) => &self.adjacency[i],
            None => &[],
        }
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<u64> {
        let list = self.neighbors(u);
        list.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| list[i].1)
    }

    /// `d_{h,G}(v, u)` for every skeleton node `u` within `h` hops of `v`.
    pub fn known_from(&self, v: NodeId) -> &[(NodeId, u64)] {
        &self.known[v.index()]
    }

    /// The skeleton as a standalone graph on ids `1..=|V_S|` in the order
    /// of [`SkeletonGraph::nodes`]. May be disconnected.
    pub fn to_graph(&self) -> Option<WeightedGraph> {
        if self.nodes.is_empty() {
            return None;
        }
        let max_w = self.edges.iter().map(|e| e.2).max().unwrap_or(1);
        let triples: Vec<(u32, u32, u64)> = self
            .edges
            .iter()
            .map(|&(u, v, w)| (self.index_of(u).unwrap() as u32 + 1, self.index_of(v).unwrap() as u32 + 1, w))
            .collect();
        Some(WeightedGraph::new_unchecked_connectivity(self.nodes.len(), max_w, &triples).expect("valid skeleton"))
    }

    /// Exact distances from skeleton node `s` to every skeleton node in the
    /// skeleton graph, indexed like [`SkeletonGraph::nodes`].
    pub fn distances_from(&self, s: NodeId) -> Vec<Dist> {
        let g = self.to_graph().expect("non-empty skeleton");
        let idx = self.index_of(s).expect("skeleton node");
        crate::graph::dijkstra_oracle(&g, NodeId::from_index(idx)).expect("valid node").entries
    }

    /// Edge list `u v w` with a header line `n m`.
    pub fn write_edges<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.nodes.len(), self.edges.len())?;
        for (u, v, w) in &self.edges {
            writeln!(out, "{u} {v} {w}")?;
        }
        Ok(())
    }

    /// One line `node flag` per graph node, flag 1 for skeleton members.
    pub fn write_flags<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, s) in self.index_of.iter().enumerate() {
            writeln!(out, "{} {}", NodeId::from_index(i), u8::from(s.is_some()))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct DistUpdates {
    id_bits: u32,
    entries: Vec<(NodeId, u64)>,
}

impl Payload for DistUpdates {
    fn payload_bits(&self) -> u64 {
        self.entries.iter().map(|&(_, d)| (self.id_bits + bit_length(d)) as u64).sum()
    }
}

/// h-hop-limited Bellman-Ford from every skeleton node at once. Each round
/// a node forwards the entries that improved in the previous round.
struct LimitedBf {
    h: u32,
    id_bits: u32,
    best: BTreeMap<NodeId, u64>,
    changed: Vec<NodeId>,
}

impl NodeProgram for LimitedBf {
    type Msg = DistUpdates;

    fn step(&mut self, ctx: &mut Context<'_, DistUpdates>) {
        let me = ctx.node();
        let g = ctx.graph();
        let mut improved: BTreeMap<NodeId, u64> = BTreeMap::new();
        for (from, msg) in ctx.local_inbox() {
            let w = g.weight(me, *from).expect("neighbor");
            for &(s, d) in &msg.entries {
                let nd = d + w;
                if self.best.get(&s).is_none_or(|&b| nd < b) {
                    self.best.insert(s, nd);
                    improved.insert(s, nd);
                }
            }
        }
        self.changed.extend(improved.keys().copied());
        if ctx.round() >= self.h as u64 {
            ctx.halt();
            return;
        }
        if !self.changed.is_empty() {
            let mut entries: Vec<(NodeId, u64)> = self.changed.drain(..).map(|s| (s, self.best[&s])).collect();
            entries.sort_unstable();
            entries.dedup();
            for a in g.neighbors(me) {
                ctx.send_local(a.node, DistUpdates { id_bits: self.id_bits, entries: entries.clone() });
            }
        }
    }
}

/// Runs exactly `h` local rounds (phase "skeleton.build") in which every
/// node learns `d_{h,G}` to the skeleton nodes within `h` hops.
pub fn build_skeleton(engine: &mut Engine<'_>, members: &[NodeId], h: u32) -> Result<SkeletonGraph, SkeletonError> {
    if h == 0 {
        return Err(SkeletonError::ZeroHopRadius);
    }
    let g = engine.graph();
    let n = g.node_count();
    let mut nodes = members.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let mut index_of = vec![None; n];
    for (i, v) in nodes.iter().enumerate() {
        index_of[v.index()] = Some(i);
    }
    let id_bits = g.id_bits();
    let programs: Vec<LimitedBf> = (0..n)
        .map(|i| {
            let mut best = BTreeMap::new();
            let mut changed = Vec::new();
            if index_of[i].is_some() {
                best.insert(NodeId::from_index(i), 0);
                changed.push(NodeId::from_index(i));
            }
            LimitedBf { h, id_bits, best, changed }
        })
        .collect();
    let outer = engine.set_phase("skeleton.build");
    let result = engine.run(programs);
    engine.set_phase(&outer);
    let done = result?;

    let known: Vec<Vec<(NodeId, u64)>> = done.into_iter().map(|p| p.best.into_iter().collect()).collect();
    let mut adjacency = vec![Vec::new(); nodes.len()];
    let mut edges = Vec::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &(v, d) in &known[u.index()] {
            if v != u {
                adjacency[i].push((v, d));
                if u < v {
                    edges.push((u, v, d));
                }
            }
        }
    }
    Ok(SkeletonGraph { h, nodes, index_of, edges, adjacency, known })
}

#[cfg(test)]
mod tests;
