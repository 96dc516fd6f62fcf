//! Exact sequential distance oracles.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Dist, NodeId, WeightedGraph};
use crate::error::GraphError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceVector {
    pub source: NodeId,
    /// Indexed by `NodeId::index()`.
    pub entries: Vec<Dist>,
}

impl DistanceVector {
    pub fn get(&self, v: NodeId) -> Dist {
        self.entries[v.index()]
    }
}

/// Exact weighted distances from `source` (binary-heap Dijkstra).
pub fn dijkstra_oracle(g: &WeightedGraph, source: NodeId) -> Result<DistanceVector, GraphError> {
    g.check_node(source)?;
    let mut dist = vec![Dist::Infinite; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source.index()] = Dist::ZERO;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if Dist::Finite(d) > dist[v.index()] {
            continue;
        }
        for a in g.neighbors(v) {
            let nd = d + a.weight;
            if Dist::Finite(nd) < dist[a.node.index()] {
                dist[a.node.index()] = Dist::Finite(nd);
                heap.push(Reverse((nd, a.node)));
            }
        }
    }
    Ok(DistanceVector { source, entries: dist })
}

/// `d_{G,h}(source, .)`: the minimum weight over paths of at most `h` edges,
/// computed by exactly `h` synchronous Bellman-Ford relaxation rounds.
pub fn hop_limited_distances(g: &WeightedGraph, source: NodeId, h: u32) -> Result<DistanceVector, GraphError> {
    g.check_node(source)?;
    let n = g.node_count();
    let mut cur = vec![Dist::Infinite; n];
    cur[source.index()] = Dist::ZERO;
    for _ in 0..h {
        let mut next = cur.clone();
        let mut changed = false;
        for e in g.edges() {
            let (a, b) = (e.u.index(), e.v.index());
            if cur[a] + e.weight < next[b] {
                next[b] = cur[a] + e.weight;
                changed = true;
            }
            if cur[b] + e.weight < next[a] {
                next[a] = cur[b] + e.weight;
                changed = true;
            }
        }
        cur = next;
        if !changed {
            break;
        }
    }
    Ok(DistanceVector { source, entries: cur })
}

/// Unweighted BFS hop counts from `source`; `u32::MAX` marks unreachable.
pub fn hop_distances_from(g: &WeightedGraph, source: NodeId) -> Vec<u32> {
    let mut hops = vec![u32::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    hops[source.index()] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let hv = hops[v.index()];
        for a in g.neighbors(v) {
            if hops[a.node.index()] == u32::MAX {
                hops[a.node.index()] = hv + 1;
                queue.push_back(a.node);
            }
        }
    }
    hops
}

pub fn hop_distance(g: &WeightedGraph, u: NodeId, v: NodeId) -> Result<u32, GraphError> {
    g.check_node(u)?;
    g.check_node(v)?;
    Ok(hop_distances_from(g, u)[v.index()])
}

/// Hop diameter `D_G`.
pub fn graph_diameter(g: &WeightedGraph) -> u32 {
    g.nodes()
        .map(|v| hop_distances_from(g, v).into_iter().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
}
