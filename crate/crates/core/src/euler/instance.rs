use std::collections::{BTreeSet, VecDeque};
use std::io::{self, Write};

use rand::Rng;

use super::{EulerInstance, NetworkDecomposition, Orientation};
use crate::graph::{NodeId, WeightedGraph};
use crate::rng::{derived_rng, stream};

fn toggle(set: &mut BTreeSet<(NodeId, NodeId)>, a: NodeId, b: NodeId) {
    let key = (a.min(b), a.max(b));
    if !set.remove(&key) {
        set.insert(key);
    }
}

/// BFS parents from node 1.
fn bfs_tree(g: &WeightedGraph) -> (Vec<Option<NodeId>>, Vec<u32>) {
    let n = g.node_count();
    let mut parent = vec![None; n];
    let mut depth = vec![u32::MAX; n];
    depth[0] = 0;
    let mut queue = VecDeque::from([NodeId(1)]);
    while let Some(v) = queue.pop_front() {
        for a in g.neighbors(v) {
            if depth[a.node.index()] == u32::MAX {
                depth[a.node.index()] = depth[v.index()] + 1;
                parent[a.node.index()] = Some(v);
                queue.push_back(a.node);
            }
        }
    }
    (parent, depth)
}

fn toggle_tree_path(
    set: &mut BTreeSet<(NodeId, NodeId)>,
    parent: &[Option<NodeId>],
    depth: &[u32],
    mut a: NodeId,
    mut b: NodeId,
) {
    while a != b {
        if depth[a.index()] < depth[b.index()] {
            std::mem::swap(&mut a, &mut b);
        }
        let p = parent[a.index()].expect("connected");
        toggle(set, a, p);
        a = p;
    }
}

/// A random Eulerian subgraph: the symmetric difference of `cycles` random
/// fundamental cycles of a BFS tree, plus for each virtual node a cycle
/// `a - x - b - (tree path) - a` through two random real nodes, plus a cycle
/// through all virtual nodes when there are at least three. Symmetric
/// differences of cycles have even degrees everywhere.
pub fn random_eulerian_instance(g: &WeightedGraph, virtual_nodes: usize, cycles: usize, seed: u64) -> EulerInstance<'_> {
    let n = g.node_count();
    let mut rng = derived_rng(seed, &[stream::INSTANCE]);
    let (parent, depth) = bfs_tree(g);
    let non_tree: Vec<_> = g
        .edges()
        .iter()
        .filter(|e| parent[e.u.index()] != Some(e.v) && parent[e.v.index()] != Some(e.u))
        .collect();
    let mut set = BTreeSet::new();
    if !non_tree.is_empty() {
        for _ in 0..cycles {
            let e = non_tree[rng.gen_range(0..non_tree.len())];
            toggle(&mut set, e.u, e.v);
            toggle_tree_path(&mut set, &parent, &depth, e.u, e.v);
        }
    }
    if n >= 2 {
        for i in 0..virtual_nodes {
            let x = NodeId::from_index(n + i);
            let a = NodeId(rng.gen_range(1..=n as u32));
            let mut b = NodeId(rng.gen_range(1..n as u32));
            if b >= a {
                b = NodeId(b.0 + 1);
            }
            toggle(&mut set, a, x);
            toggle(&mut set, x, b);
            toggle_tree_path(&mut set, &parent, &depth, a, b);
        }
    }
    if virtual_nodes >= 3 {
        for i in 0..virtual_nodes {
            toggle(&mut set, NodeId::from_index(n + i), NodeId::from_index(n + (i + 1) % virtual_nodes));
        }
    }
    EulerInstance::new(g, virtual_nodes, set.into_iter().collect())
}

/// One line `u v` per oriented edge, meaning `u -> v`.
pub fn write_orientation<W: Write>(mut out: W, orientation: &Orientation) -> io::Result<()> {
    for (a, b) in orientation.arcs.iter().flatten() {
        writeln!(out, "{a} {b}")?;
    }
    Ok(())
}

/// One line `node cluster color` per node; clusters and colors are 0-based.
pub fn write_decomposition<W: Write>(mut out: W, d: &NetworkDecomposition) -> io::Result<()> {
    for (i, &c) in d.cluster_of.iter().enumerate() {
        writeln!(out, "{} {} {}", NodeId::from_index(i), c, d.cluster_color[c])?;
    }
    Ok(())
}
