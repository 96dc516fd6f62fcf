//! Weighted undirected graphs, deterministic generators and the edge-list
//! file format.

mod generate;
mod io;
pub mod oracle;

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

pub use generate::{generate_graph, GraphKind, GraphSpec, WeightRange};
pub use io::{read_edge_list, write_edge_list};
pub use oracle::{
    dijkstra_oracle, graph_diameter, hop_distance, hop_distances_from, hop_limited_distances,
    DistanceVector,
};

use crate::error::GraphError;

/// Node identifier. Ids are `1..=n`; `index()` gives the zero-based slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32 + 1)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A path length, or the explicit infinity marker. `Finite` orders below
/// `Infinite`, and adding anything to `Infinite` stays `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dist {
    Finite(u64),
    Infinite,
}

impl Dist {
    pub const ZERO: Dist = Dist::Finite(0);

    pub fn finite(self) -> Option<u64> {
        match self {
            Dist::Finite(d) => Some(d),
            Dist::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Dist::Finite(_))
    }

    /// Bits needed to encode the value; infinity is a one-bit flag.
    pub fn bits(self) -> u32 {
        match self {
            Dist::Finite(d) => bit_length(d),
            Dist::Infinite => 1,
        }
    }
}

impl Add<u64> for Dist {
    type Output = Dist;
    fn add(self, rhs: u64) -> Dist {
        match self {
            Dist::Finite(d) => Dist::Finite(d.saturating_add(rhs)),
            Dist::Infinite => Dist::Infinite,
        }
    }
}

impl Add for Dist {
    type Output = Dist;
    fn add(self, rhs: Dist) -> Dist {
        match (self, rhs) {
            (Dist::Finite(a), Dist::Finite(b)) => Dist::Finite(a.saturating_add(b)),
            _ => Dist::Infinite,
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Finite(d) => write!(f, "{d}"),
            Dist::Infinite => f.write_str("inf"),
        }
    }
}

/// Number of bits in the binary representation of `v` (at least 1).
pub fn bit_length(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

/// `ceil(log2 n)`, at least 1.
pub fn log2_ceil(n: usize) -> u32 {
    if n <= 2 {
        1
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: u64,
}

impl Edge {
    pub fn other(&self, x: NodeId) -> NodeId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adjacent {
    pub node: NodeId,
    pub weight: u64,
    /// Index into [`WeightedGraph::edges`].
    pub edge: usize,
}

/// Undirected connected graph with integer weights in `[1, W]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Adjacent>>,
    max_weight: u64,
}

impl WeightedGraph {
    /// Builds a graph from `(u, v, w)` triples, validating every invariant:
    /// no self-loops, no parallel edges, `1 <= w <= max_weight`, connected.
    pub fn new(n: usize, max_weight: u64, triples: &[(u32, u32, u64)]) -> Result<Self, GraphError> {
        let graph = Self::new_unchecked_connectivity(n, max_weight, triples)?;
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    /// Like [`WeightedGraph::new`] but accepts disconnected graphs. Used for
    /// auxiliary graphs (power graphs, residual subgraphs).
    pub fn new_unchecked_connectivity(
        n: usize,
        max_weight: u64,
        triples: &[(u32, u32, u64)],
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::TooFewNodes(n));
        }
        if max_weight == 0 {
            return Err(GraphError::EmptyWeightRange { lo: 1, hi: 0 });
        }
        let mut edges: Vec<Edge> = Vec::with_capacity(triples.len());
        for &(a, b, w) in triples {
            for x in [a, b] {
                if x == 0 || x as usize > n {
                    return Err(GraphError::UnknownNode(x));
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if w == 0 || w > max_weight {
                return Err(GraphError::WeightOutOfRange { u: a, v: b, weight: w, max: max_weight });
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge { u: NodeId(u), v: NodeId(v), weight: w });
        }
        edges.sort_by_key(|e| (e.u, e.v));
        for pair in edges.windows(2) {
            if pair[0].u == pair[1].u && pair[0].v == pair[1].v {
                return Err(GraphError::ParallelEdge(pair[0].u.0, pair[0].v.0));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.u.index()].push(Adjacent { node: e.v, weight: e.weight, edge: i });
            adjacency[e.v.index()].push(Adjacent { node: e.u, weight: e.weight, edge: i });
        }
        for list in &mut adjacency {
            list.sort_by_key(|a| a.node);
        }
        Ok(WeightedGraph { edges, adjacency, max_weight })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The weight bound `W`.
    pub fn max_weight(&self) -> u64 {
        self.max_weight
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::from_index)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn neighbors(&self, v: NodeId) -> &[Adjacent] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.index()].len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 >= 1 && v.index() < self.node_count()
    }

    /// Index of the edge `{u, v}`, if present.
    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<usize> {
        let list = self.adjacency.get(u.index())?;
        list.binary_search_by_key(&v, |a| a.node).ok().map(|i| list[i].edge)
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<u64> {
        self.edge_between(u, v).map(|i| self.edges[i].weight)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for a in &self.adjacency[x] {
                let y = a.node.index();
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n
    }

    pub(crate) fn check_node(&self, v: NodeId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(v.0))
        }
    }

    /// Bits of one node identifier, `ceil(log2 n)`.
    pub fn id_bits(&self) -> u32 {
        log2_ceil(self.node_count())
    }
}
