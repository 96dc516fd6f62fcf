//! Eulerian orientation oracle: network decomposition of G², cycle removal
//! inside extended clusters color by color, then Euler circuits on the
//! low-arboricity remainder.

mod decomposition;
mod instance;

use std::collections::{BTreeMap, BTreeSet, HashSet};

pub use decomposition::{network_decomposition, power_graph, NetworkDecomposition, C_CHI, C_D};
pub use instance::{random_eulerian_instance, write_decomposition, write_orientation};

use crate::engine::Engine;
use crate::error::EulerError;
use crate::graph::{log2_ceil, NodeId, WeightedGraph};
use crate::rng::{derive_seed, stream};

/// Virtual nodes allowed per instance: `C_VIRT * ceil(log2 n)^2`.
pub const C_VIRT: usize = 1;
/// Residual orientation is charged `C_RES * a * ceil(log2 n)` rounds.
pub const C_RES: u64 = 1;

/// A target subgraph H of the host graph plus virtual nodes. Virtual nodes
/// get ids `n + 1 ..= n + virtual_nodes` and are simulated by real nodes
/// round-robin by id.
#[derive(Clone, Debug)]
pub struct EulerInstance<'g> {
    pub graph: &'g WeightedGraph,
    pub virtual_nodes: usize,
    /// Edges of H. Edges between two real nodes must be host edges; edges
    /// touching a virtual node are virtual edges.
    pub edges: Vec<(NodeId, NodeId)>,
}

impl<'g> EulerInstance<'g> {
    pub fn new(graph: &'g WeightedGraph, virtual_nodes: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        EulerInstance { graph, virtual_nodes, edges }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count() + self.virtual_nodes
    }

    pub fn is_virtual(&self, v: NodeId) -> bool {
        v.index() >= self.graph.node_count()
    }

    /// The real node that simulates `v`.
    pub fn host(&self, v: NodeId) -> NodeId {
        let n = self.graph.node_count();
        if v.index() < n {
            v
        } else {
            NodeId::from_index((v.index() - n) % n)
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for &(a, b) in &self.edges {
            deg[a.index()] += 1;
            deg[b.index()] += 1;
        }
        deg
    }

    /// Checks ids, host edges, duplicates, the virtual-node bound and even
    /// degrees, in that order.
    pub fn validate(&self) -> Result<(), EulerError> {
        let n = self.graph.node_count();
        let bound = C_VIRT * (log2_ceil(n) as usize).pow(2);
        if self.virtual_nodes > bound {
            return Err(EulerError::TooManyVirtualNodes { count: self.virtual_nodes, bound });
        }
        let mut seen = HashSet::new();
        for &(a, b) in &self.edges {
            for x in [a, b] {
                if x.0 == 0 || x.index() >= self.node_count() {
                    return Err(EulerError::UnknownNode(x));
                }
            }
            if a == b || (!self.is_virtual(a) && !self.is_virtual(b) && self.graph.edge_between(a, b).is_none()) {
                return Err(EulerError::NotAHostEdge(a, b));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(EulerError::DuplicateEdge(a.min(b), a.max(b)));
            }
        }
        if let Some((i, &d)) = self.degrees().iter().enumerate().find(|(_, d)| *d % 2 == 1) {
            return Err(EulerError::OddDegree(NodeId::from_index(i), d));
        }
        Ok(())
    }
}

/// Direction chosen for each H edge, parallel to the instance's edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    pub arcs: Vec<Option<(NodeId, NodeId)>>,
}

impl Orientation {
    pub fn empty(edges: usize) -> Self {
        Orientation { arcs: vec![None; edges] }
    }

    pub fn is_complete(&self) -> bool {
        self.arcs.iter().all(Option::is_some)
    }

    /// `(in, out)` per node slot over oriented edges.
    pub fn degrees(&self, nodes: usize) -> Vec<(usize, usize)> {
        let mut d = vec![(0, 0); nodes];
        for &(a, b) in self.arcs.iter().flatten() {
            d[a.index()].1 += 1;
            d[b.index()].0 += 1;
        }
        d
    }

    pub fn is_balanced(&self, nodes: usize) -> bool {
        self.degrees(nodes).iter().all(|(i, o)| i == o)
    }
}

/// `C ∪ N_G(C)`.
pub fn extend_cluster(cluster: &[NodeId], g: &WeightedGraph) -> BTreeSet<NodeId> {
    let mut out: BTreeSet<NodeId> = cluster.iter().copied().collect();
    for &v in cluster {
        out.extend(g.neighbors(v).iter().map(|a| a.node));
    }
    out
}

/// Repeatedly finds a cycle among `candidates` (indices into `edges` whose
/// arcs are still unset) by depth-first search from the lowest-id node with
/// a remaining edge, orients it, and removes it, until what is left is a
/// forest. Returns the indices oriented.
pub fn orient_cluster_cycles(
    edges: &[(NodeId, NodeId)],
    candidates: &[usize],
    orientation: &mut Orientation,
) -> Vec<usize> {
    let mut adj: BTreeMap<NodeId, BTreeSet<(NodeId, usize)>> = BTreeMap::new();
    for &i in candidates {
        if orientation.arcs[i].is_none() {
            let (a, b) = edges[i];
            adj.entry(a).or_default().insert((b, i));
            adj.entry(b).or_default().insert((a, i));
        }
    }
    let mut removed = Vec::new();
    let mut acyclic: BTreeSet<NodeId> = BTreeSet::new();
    loop {
        let start = adj.iter().find(|(v, nbrs)| !nbrs.is_empty() && !acyclic.contains(v)).map(|(v, _)| *v);
        let Some(start) = start else { break };
        match find_cycle(&adj, start) {
            Some(cycle) => {
                for &(from, to, i) in &cycle {
                    orientation.arcs[i] = Some((from, to));
                    adj.get_mut(&from).unwrap().remove(&(to, i));
                    adj.get_mut(&to).unwrap().remove(&(from, i));
                    removed.push(i);
                }
            }
            None => {
                // The whole component of `start` is a tree.
                acyclic.extend(component(&adj, start));
            }
        }
    }
    removed
}

fn component(adj: &BTreeMap<NodeId, BTreeSet<(NodeId, usize)>>, start: NodeId) -> Vec<NodeId> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(u, _) in &adj[&v] {
            if seen.insert(u) {
                stack.push(u);
            }
        }
    }
    seen.into_iter().collect()
}

/// Iterative DFS; returns the arcs of the first cycle closed by a back edge.
fn find_cycle(adj: &BTreeMap<NodeId, BTreeSet<(NodeId, usize)>>, start: NodeId) -> Option<Vec<(NodeId, NodeId, usize)>> {
    let mut parent: BTreeMap<NodeId, (NodeId, usize)> = BTreeMap::new();
    let mut depth: BTreeMap<NodeId, usize> = BTreeMap::from([(start, 0)]);
    let mut stack: Vec<(NodeId, Vec<(NodeId, usize)>)> = vec![(start, adj[&start].iter().copied().collect())];
    while let Some((v, pending)) = stack.last_mut() {
        let v = *v;
        let Some((u, e)) = pending.pop() else {
            stack.pop();
            continue;
        };
        if parent.get(&v).is_some_and(|&(_, pe)| pe == e) {
            continue;
        }
        if let Some(&du) = depth.get(&u) {
            if du < depth[&v] {
                // Back edge v -> u closes the cycle u -> ... -> v -> u.
                let mut arcs = vec![(v, u, e)];
                let mut x = v;
                while x != u {
                    let (p, pe) = parent[&x];
                    arcs.push((p, x, pe));
                    x = p;
                }
                return Some(arcs);
            }
            continue;
        }
        parent.insert(u, (v, e));
        depth.insert(u, depth[&v] + 1);
        let next: Vec<(NodeId, usize)> = adj[&u].iter().copied().collect();
        stack.push((u, next));
    }
    None
}

/// Orients every remaining edge by walking Euler circuits (Hierholzer) in
/// each component. Every node must have even degree among `candidates`.
pub fn orient_residual(
    edges: &[(NodeId, NodeId)],
    candidates: &[usize],
    orientation: &mut Orientation,
) -> Result<(), EulerError> {
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, usize)>> = BTreeMap::new();
    for &i in candidates {
        if orientation.arcs[i].is_none() {
            let (a, b) = edges[i];
            adj.entry(a).or_default().push((b, i));
            adj.entry(b).or_default().push((a, i));
        }
    }
    if let Some((v, list)) = adj.iter().find(|(_, l)| l.len() % 2 == 1) {
        return Err(EulerError::OddDegree(*v, list.len()));
    }
    for list in adj.values_mut() {
        list.reverse();
    }
    let mut used: HashSet<usize> = HashSet::new();
    let starts: Vec<NodeId> = adj.keys().copied().collect();
    for s in starts {
        // Hierholzer with an explicit stack of (node, arriving edge).
        let mut stack: Vec<(NodeId, Option<(NodeId, usize)>)> = vec![(s, None)];
        while let Some(&(v, _)) = stack.last() {
            let next = loop {
                match adj.get_mut(&v).and_then(|l| l.pop()) {
                    Some((_, i)) if used.contains(&i) => continue,
                    other => break other,
                }
            };
            match next {
                Some((u, i)) => {
                    used.insert(i);
                    stack.push((u, Some((v, i))));
                }
                None => {
                    let (x, arrived) = stack.pop().unwrap();
                    if let Some((from, i)) = arrived {
                        orientation.arcs[i] = Some((from, x));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Edges left after cluster processing, grouped by the color whose extended
/// cluster contained them; the last group holds edges no extended cluster
/// contained (virtual edges between far-apart hosts).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForestCover {
    pub per_color: Vec<Vec<usize>>,
    pub deferred: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct EulerReport {
    pub orientation: Orientation,
    pub decomposition: NetworkDecomposition,
    pub forests: ForestCover,
    /// Edges oriented during the per-color cluster phase.
    pub cluster_oriented: usize,
}

/// Orients H so that every real and virtual node is balanced. Ledger phases:
/// "euler.decomposition", "euler.clusters", "euler.residual".
pub fn euler_orient(engine: &mut Engine<'_>, instance: &EulerInstance<'_>) -> Result<EulerReport, EulerError> {
    instance.validate()?;
    let g = instance.graph;
    let n = g.node_count();
    let log = log2_ceil(n) as u64;
    let outer = engine.phase().to_string();

    engine.set_phase("euler.decomposition");
    let g2 = power_graph(g);
    let seed = derive_seed(engine.config().seed, &[stream::DECOMPOSITION]);
    let decomposition = network_decomposition(&g2, seed);
    // Ball growing on G² for each color; one G² hop is two G hops.
    engine.charge(decomposition.colors as u64 * (2 * decomposition.radius_cap as u64 + 1));

    engine.set_phase("euler.clusters");
    let mut orientation = Orientation::empty(instance.edges.len());
    let mut forests = ForestCover { per_color: vec![Vec::new(); decomposition.colors], deferred: Vec::new() };
    let mut assigned = vec![false; instance.edges.len()];
    let mut cluster_oriented = 0;
    for color in 0..decomposition.colors {
        let mut color_cost = 0u64;
        for members in decomposition.clusters_of_color(color) {
            let ext = extend_cluster(&members, g);
            let inside: Vec<usize> = instance
                .edges
                .iter()
                .enumerate()
                .filter(|(i, &(a, b))| {
                    orientation.arcs[*i].is_none() && ext.contains(&instance.host(a)) && ext.contains(&instance.host(b))
                })
                .map(|(i, _)| i)
                .collect();
            cluster_oriented += orient_cluster_cycles(&instance.edges, &inside, &mut orientation).len();
            for &i in &inside {
                if orientation.arcs[i].is_none() && !assigned[i] {
                    assigned[i] = true;
                    forests.per_color[color].push(i);
                }
            }
            color_cost = color_cost.max(2 * extended_radius(g, &ext) + 1);
        }
        // Clusters of one color run in parallel: charge the slowest.
        engine.charge(color_cost);
    }
    forests.deferred = (0..instance.edges.len()).filter(|&i| orientation.arcs[i].is_none() && !assigned[i]).collect();

    engine.set_phase("euler.residual");
    let rest: Vec<usize> = (0..instance.edges.len()).filter(|&i| orientation.arcs[i].is_none()).collect();
    orient_residual(&instance.edges, &rest, &mut orientation)?;
    let arboricity = decomposition.colors as u64 + u64::from(!forests.deferred.is_empty());
    engine.charge(C_RES * arboricity * log);
    engine.set_phase(&outer);

    Ok(EulerReport { orientation, decomposition, forests, cluster_oriented })
}

/// Eccentricity of the lowest member of `ext` inside `G[ext]`.
fn extended_radius(g: &WeightedGraph, ext: &BTreeSet<NodeId>) -> u64 {
    let Some(&start) = ext.iter().next() else { return 0 };
    let mut dist: BTreeMap<NodeId, u64> = BTreeMap::from([(start, 0)]);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for a in g.neighbors(v) {
            if ext.contains(&a.node) && !dist.contains_key(&a.node) {
                dist.insert(a.node, dist[&v] + 1);
                queue.push_back(a.node);
            }
        }
    }
    dist.values().copied().max().unwrap_or(0)
}

#[cfg(test)]
mod tests;
