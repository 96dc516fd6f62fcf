use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{log2_ceil, NodeId, WeightedGraph};
use crate::rng::derived_rng;

/// Colors stay below `C_CHI * ceil(log2 n)` with high probability.
pub const C_CHI: usize = 3;
/// Cluster diameters in the decomposed graph are at most `C_D * ceil(log2 n)`.
pub const C_D: usize = 2;

/// Edge `(u, v)` iff `u` and `v` are one or two hops apart in `g`. Unit
/// weights.
pub fn power_graph(g: &WeightedGraph) -> WeightedGraph {
    let n = g.node_count();
    let mut triples = Vec::new();
    let mut mark = vec![usize::MAX; n];
    for v in g.nodes() {
        mark[v.index()] = v.index();
        let mut near = Vec::new();
        for a in g.neighbors(v) {
            for x in std::iter::once(a.node).chain(g.neighbors(a.node).iter().map(|b| b.node)) {
                if mark[x.index()] != v.index() {
                    mark[x.index()] = v.index();
                    near.push(x);
                }
            }
        }
        triples.extend(near.into_iter().filter(|&x| x > v).map(|x| (v.0, x.0, 1)));
    }
    WeightedGraph::new_unchecked_connectivity(n, 1, &triples).expect("power graph of a valid graph")
}

/// Clusters with colors; same-colored clusters are non-adjacent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkDecomposition {
    pub cluster_of: Vec<usize>,
    pub cluster_color: Vec<usize>,
    /// Members per cluster, sorted by id.
    pub clusters: Vec<Vec<NodeId>>,
    pub colors: usize,
    /// Largest radius any ball could grow to.
    pub radius_cap: u32,
}

impl NetworkDecomposition {
    pub fn clusters_of_color(&self, color: usize) -> Vec<Vec<NodeId>> {
        self.clusters.iter().zip(&self.cluster_color).filter(|(_, &c)| c == color).map(|(m, _)| m.clone()).collect()
    }
}

/// Randomized ball carving, one color per pass. Each pass visits the
/// unclustered nodes in a random order; an unvisited center grows a ball of
/// geometric radius `r` (capped at `ceil(log2 n)`) over still-available
/// nodes. Nodes closer than `r` form the cluster, nodes at distance exactly
/// `r` sit out this pass, which keeps same-pass clusters non-adjacent.
pub fn network_decomposition(g: &WeightedGraph, seed: u64) -> NetworkDecomposition {
    let n = g.node_count();
    let cap = log2_ceil(n);
    let mut cluster_of = vec![usize::MAX; n];
    let mut cluster_color = Vec::new();
    let mut clusters: Vec<Vec<NodeId>> = Vec::new();
    let mut color = 0;
    let mut remaining: Vec<NodeId> = g.nodes().collect();
    while !remaining.is_empty() {
        let mut rng = derived_rng(seed, &[color as u64]);
        remaining.shuffle(&mut rng);
        // 0 = available, 1 = blocked this pass, 2 = clustered.
        let mut state: Vec<u8> = cluster_of.iter().map(|&c| if c == usize::MAX { 0 } else { 2 }).collect();
        let mut dist = vec![u32::MAX; n];
        for &c in &remaining {
            if state[c.index()] != 0 {
                continue;
            }
            let mut r = 1;
            while r < cap && rng.gen_bool(0.5) {
                r += 1;
            }
            let mut members = Vec::new();
            let mut touched = vec![c];
            dist[c.index()] = 0;
            let mut queue = VecDeque::from([c]);
            while let Some(v) = queue.pop_front() {
                let d = dist[v.index()];
                if d == r {
                    state[v.index()] = 1;
                    continue;
                }
                members.push(v);
                for a in g.neighbors(v) {
                    if state[a.node.index()] == 0 && dist[a.node.index()] == u32::MAX {
                        dist[a.node.index()] = d + 1;
                        touched.push(a.node);
                        queue.push_back(a.node);
                    }
                }
            }
            for v in touched {
                dist[v.index()] = u32::MAX;
            }
            members.sort_unstable();
            for &v in &members {
                state[v.index()] = 2;
                cluster_of[v.index()] = clusters.len();
            }
            clusters.push(members);
            cluster_color.push(color);
        }
        remaining.retain(|v| cluster_of[v.index()] == usize::MAX);
        remaining.sort_unstable();
        color += 1;
    }
    NetworkDecomposition { cluster_of, cluster_color, clusters, colors: color, radius_cap: cap }
}
