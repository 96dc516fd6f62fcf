//! Contraction / consensus / aggregation rounds.
//!
//! [`contract`], [`consensus`] and [`aggregate`] evaluate one round
//! sequentially; [`MaSession`] executes the same round on the round engine
//! with converge-casts over overlay trees.

mod session;

use serde::{Deserialize, Serialize};

pub use session::{evaluate_sequential, ma_round, MaInstance, MaOutput, MaSession, C_OVERLAY, C_VAL};

use crate::error::MinorError;
use crate::graph::{Dist, NodeId, WeightedGraph};

/// One flag per graph edge; `true` means contract (⊤).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractionChoice(Vec<bool>);

impl ContractionChoice {
    pub fn new(g: &WeightedGraph, flags: Vec<bool>) -> Result<Self, MinorError> {
        if flags.len() != g.edge_count() {
            return Err(MinorError::LengthMismatch { expected: g.edge_count(), got: flags.len() });
        }
        Ok(ContractionChoice(flags))
    }

    pub fn none(g: &WeightedGraph) -> Self {
        ContractionChoice(vec![false; g.edge_count()])
    }

    pub fn all(g: &WeightedGraph) -> Self {
        ContractionChoice(vec![true; g.edge_count()])
    }

    pub fn is_contracted(&self, edge: usize) -> bool {
        self.0[edge]
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossEdge {
    /// Originating edge index in the graph.
    pub edge: usize,
    /// Supernode of `edge.u`.
    pub a: usize,
    /// Supernode of `edge.v`.
    pub b: usize,
}

/// The minor obtained by contracting all ⊤ edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinorNetwork {
    supernode_of: Vec<usize>,
    /// Members sorted by id; supernodes ordered by smallest member.
    supernodes: Vec<Vec<NodeId>>,
    cross_edges: Vec<CrossEdge>,
}

impl MinorNetwork {
    pub fn supernode_of(&self, v: NodeId) -> usize {
        self.supernode_of[v.index()]
    }

    pub fn supernodes(&self) -> &[Vec<NodeId>] {
        &self.supernodes
    }

    pub fn cross_edges(&self) -> &[CrossEdge] {
        &self.cross_edges
    }

    pub fn node_count(&self) -> usize {
        self.supernode_of.len()
    }
}

/// Supernodes are the connected components of the ⊤ subgraph; every edge
/// between distinct supernodes becomes its own cross edge.
pub fn contract(g: &WeightedGraph, choices: &ContractionChoice) -> MinorNetwork {
    let n = g.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, e) in g.edges().iter().enumerate() {
        if choices.is_contracted(i) {
            let (a, b) = (find(&mut parent, e.u.index()), find(&mut parent, e.v.index()));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut supernodes: Vec<Vec<NodeId>> = Vec::new();
    let mut supernode_of = vec![0; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = supernodes.len();
            supernodes.push(Vec::new());
        }
        supernode_of[v] = label[r];
        supernodes[label[r]].push(NodeId::from_index(v));
    }
    let cross_edges = g
        .edges()
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let (a, b) = (supernode_of[e.u.index()], supernode_of[e.v.index()]);
            (a != b).then_some(CrossEdge { edge: i, a, b })
        })
        .collect();
    MinorNetwork { supernode_of, supernodes, cross_edges }
}

/// Rooted tree over one supernode's members: a balanced binary tree in
/// heap layout over the members sorted by id. Not a subgraph of G.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlayTree {
    members: Vec<NodeId>,
}

impl OverlayTree {
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn root(&self) -> NodeId {
        self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn position(&self, v: NodeId) -> Option<usize> {
        self.members.binary_search(&v).ok()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let i = self.position(v)?;
        (i > 0).then(|| self.members[(i - 1) / 2])
    }

    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        match self.position(v) {
            Some(i) => [2 * i + 1, 2 * i + 2].into_iter().filter_map(|c| self.members.get(c).copied()).collect(),
            None => Vec::new(),
        }
    }

    /// Position of `v` among its parent's children (0 or 1).
    pub fn child_slot(&self, v: NodeId) -> usize {
        let i = self.position(v).expect("member");
        (i + 1) % 2
    }

    pub fn depth(&self) -> u32 {
        crate::graph::bit_length(self.members.len() as u64) - 1
    }

    pub fn max_degree(&self) -> usize {
        self.members.iter().map(|&v| self.children(v).len() + usize::from(self.parent(v).is_some())).max().unwrap_or(0)
    }
}

/// Builds the overlay tree for `members`, which must be connected through
/// `edges` (the supernode's contracted edges).
pub fn build_overlay_tree(members: &[NodeId], edges: &[(NodeId, NodeId)]) -> Result<OverlayTree, MinorError> {
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(MinorError::DisconnectedMembers);
    }
    let pos = |v: NodeId| sorted.binary_search(&v).ok();
    let mut parent: Vec<usize> = (0..sorted.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = sorted.len();
    for &(a, b) in edges {
        if let (Some(i), Some(j)) = (pos(a), pos(b)) {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                components -= 1;
            }
        }
    }
    if components != 1 {
        return Err(MinorError::DisconnectedMembers);
    }
    Ok(OverlayTree { members: sorted })
}

/// Built-in commutative, associative operators over [`Dist`] values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregationOperator {
    Min,
    Max,
    Sum,
    /// Bitwise or over finite values.
    Or,
}

impl AggregationOperator {
    pub fn name(self) -> &'static str {
        match self {
            AggregationOperator::Min => "min",
            AggregationOperator::Max => "max",
            AggregationOperator::Sum => "sum",
            AggregationOperator::Or => "or",
        }
    }

    pub fn identity(self) -> Dist {
        match self {
            AggregationOperator::Min => Dist::Infinite,
            _ => Dist::ZERO,
        }
    }

    /// Rejects values outside the operator's domain.
    pub fn check(self, value: Dist) -> Result<(), MinorError> {
        if self == AggregationOperator::Or && !value.is_finite() {
            return Err(MinorError::DomainMismatch { op: self.name(), value: value.to_string() });
        }
        Ok(())
    }

    /// Combines two in-domain values.
    pub fn combine(self, a: Dist, b: Dist) -> Dist {
        match self {
            AggregationOperator::Min => a.min(b),
            AggregationOperator::Max => a.max(b),
            AggregationOperator::Sum => a + b,
            AggregationOperator::Or => match (a, b) {
                (Dist::Finite(x), Dist::Finite(y)) => Dist::Finite(x | y),
                _ => Dist::Infinite,
            },
        }
    }

    pub fn fold(self, values: impl IntoIterator<Item = Dist>) -> Dist {
        values.into_iter().fold(self.identity(), |acc, v| self.combine(acc, v))
    }
}

/// Every member of supernode `s` learns the fold of its members' inputs.
pub fn consensus(minor: &MinorNetwork, inputs: &[Dist], op: AggregationOperator) -> Result<Vec<Dist>, MinorError> {
    if inputs.len() != minor.node_count() {
        return Err(MinorError::LengthMismatch { expected: minor.node_count(), got: inputs.len() });
    }
    for &x in inputs {
        op.check(x)?;
    }
    let per_super: Vec<Dist> =
        minor.supernodes.iter().map(|members| op.fold(members.iter().map(|v| inputs[v.index()]))).collect();
    Ok(minor.supernode_of.iter().map(|&s| per_super[s]).collect())
}

/// Every member of supernode `s` learns the fold of `z_{e,s}` over the
/// cross edges incident to `s`; the identity when there are none.
/// `z[i]` holds `(z for the side of edge.u, z for the side of edge.v)` for
/// cross edge `i`.
pub fn aggregate(
    minor: &MinorNetwork,
    g: &WeightedGraph,
    z: &[Option<(Dist, Dist)>],
    op: AggregationOperator,
) -> Result<Vec<Dist>, MinorError> {
    let mut per_super = vec![op.identity(); minor.supernodes.len()];
    for (i, ce) in minor.cross_edges.iter().enumerate() {
        let (za, zb) = z.get(i).copied().flatten().ok_or(MinorError::MissingEdgeValue { edge: ce.edge, node: g.edge(ce.edge).u })?;
        op.check(za)?;
        op.check(zb)?;
        per_super[ce.a] = op.combine(per_super[ce.a], za);
        per_super[ce.b] = op.combine(per_super[ce.b], zb);
    }
    Ok(minor.supernode_of.iter().map(|&s| per_super[s]).collect())
}

#[cfg(test)]
mod tests;
