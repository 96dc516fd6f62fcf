use proptest::prelude::*;

use super::*;
use crate::engine::{Engine, HybridConfig};
use crate::graph::{generate_graph, hop_distances_from, GraphKind, GraphSpec, WeightRange};

fn path(n: usize) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::Path, n, 0).with_weights(WeightRange::UNIT)).unwrap()
}

fn cycle(n: usize) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::Cycle, n, 0).with_weights(WeightRange::UNIT)).unwrap()
}

fn random(n: usize, seed: u64) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::RandomConnected { p: 0.08 }, n, seed)).unwrap()
}

fn complete(n: usize) -> WeightedGraph {
    let mut t = Vec::new();
    for a in 1..=n as u32 {
        for b in a + 1..=n as u32 {
            t.push((a, b, 1));
        }
    }
    WeightedGraph::new(n, 1, &t).unwrap()
}

/// Checks coloring validity and weak diameters by BFS on the decomposed
/// graph; returns the largest weak diameter.
fn check_decomposition(g2: &WeightedGraph, d: &NetworkDecomposition) -> u32 {
    for e in g2.edges() {
        let (a, b) = (d.cluster_of[e.u.index()], d.cluster_of[e.v.index()]);
        if a != b {
            assert_ne!(d.cluster_color[a], d.cluster_color[b], "adjacent clusters share a color");
        }
    }
    let mut worst = 0;
    for members in &d.clusters {
        for &v in members {
            let dist = hop_distances_from(g2, v);
            for &u in members {
                worst = worst.max(dist[u.index()]);
            }
        }
    }
    worst
}

fn pairwise_hops(g: &WeightedGraph) -> Vec<Vec<u32>> {
    g.nodes().map(|v| hop_distances_from(g, v)).collect()
}

#[test]
fn power_graph_examples() {
    let g2 = power_graph(&path(3));
    assert!(g2.edge_between(NodeId(1), NodeId(3)).is_some());
    assert_eq!(g2.edge_count(), 3);
    let k = complete(6);
    assert_eq!(power_graph(&k).edge_count(), k.edge_count());
}

#[test]
fn power_graph_of_grid_matches_all_pairs_bfs() {
    let g = generate_graph(&GraphSpec::grid(5, 5, 0)).unwrap();
    let g2 = power_graph(&g);
    let hops = pairwise_hops(&g);
    for u in g.nodes() {
        for v in g.nodes() {
            let d = hops[u.index()][v.index()];
            assert_eq!(g2.edge_between(u, v).is_some(), (1..=2).contains(&d), "{u} {v}");
        }
    }
}

#[test]
fn decomposition_small_cases() {
    let one = WeightedGraph::new_unchecked_connectivity(1, 1, &[]).unwrap();
    let d = network_decomposition(&one, 0);
    assert_eq!((d.clusters.len(), d.colors), (1, 1));
    let k = complete(8);
    let d = network_decomposition(&k, 3);
    check_decomposition(&k, &d);
    assert!(d.colors <= C_CHI * 3);
}

#[test]
fn decomposition_random_128_meets_bounds() {
    let g = random(128, 11);
    let g2 = power_graph(&g);
    let d = network_decomposition(&g2, 11);
    let diam = check_decomposition(&g2, &d);
    let log = log2_ceil(128) as usize;
    assert!(d.colors <= C_CHI * log, "{} colors", d.colors);
    assert!(diam as usize <= C_D * log, "diameter {diam}");
    // Same-color extended clusters are node-disjoint.
    for color in 0..d.colors {
        let exts: Vec<_> = d.clusters_of_color(color).iter().map(|c| extend_cluster(c, &g)).collect();
        for i in 0..exts.len() {
            for j in i + 1..exts.len() {
                assert!(exts[i].is_disjoint(&exts[j]));
            }
        }
    }
}

#[test]
fn extend_cluster_examples() {
    let g = path(3);
    assert_eq!(extend_cluster(&[NodeId(2)], &g).into_iter().collect::<Vec<_>>(), vec![NodeId(1), NodeId(2), NodeId(3)]);
    let k = complete(4);
    let all: Vec<NodeId> = k.nodes().collect();
    assert_eq!(extend_cluster(&all, &k).len(), 4);
}

fn balance_of(edges: &[(NodeId, NodeId)], o: &Orientation, nodes: usize) -> Vec<(usize, usize)> {
    assert!(edges.iter().zip(&o.arcs).all(|(&(a, b), arc)| match arc {
        Some((x, y)) => (*x, *y) == (a, b) || (*x, *y) == (b, a),
        None => true,
    }));
    o.degrees(nodes)
}

#[test]
fn cluster_cycles_examples() {
    let tri = vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(3)), (NodeId(1), NodeId(3))];
    let mut o = Orientation::empty(3);
    assert_eq!(orient_cluster_cycles(&tri, &[0, 1, 2], &mut o).len(), 3);
    assert!(o.is_complete() && o.is_balanced(4));

    let tree = vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(3)), (NodeId(2), NodeId(4))];
    let mut o = Orientation::empty(3);
    assert!(orient_cluster_cycles(&tree, &[0, 1, 2], &mut o).is_empty());

    // Two triangles sharing node 3.
    let bow = vec![
        (NodeId(1), NodeId(2)),
        (NodeId(2), NodeId(3)),
        (NodeId(1), NodeId(3)),
        (NodeId(3), NodeId(4)),
        (NodeId(4), NodeId(5)),
        (NodeId(3), NodeId(5)),
    ];
    let mut o = Orientation::empty(6);
    orient_cluster_cycles(&bow, &[0, 1, 2, 3, 4, 5], &mut o);
    assert!(o.is_complete());
    assert_eq!(balance_of(&bow, &o, 6)[2], (2, 2));
}

#[test]
fn residual_examples() {
    let mut o = Orientation::empty(0);
    orient_residual(&[], &[], &mut o).unwrap();
    let c4 = vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(3)), (NodeId(3), NodeId(4)), (NodeId(1), NodeId(4))];
    let mut o = Orientation::empty(4);
    orient_residual(&c4, &[0, 1, 2, 3], &mut o).unwrap();
    assert!(o.is_complete() && o.is_balanced(5));
    // Figure eight through node 1.
    let eight = vec![
        (NodeId(1), NodeId(2)),
        (NodeId(2), NodeId(3)),
        (NodeId(1), NodeId(3)),
        (NodeId(1), NodeId(4)),
        (NodeId(4), NodeId(5)),
        (NodeId(1), NodeId(5)),
    ];
    let mut o = Orientation::empty(6);
    orient_residual(&eight, &[0, 1, 2, 3, 4, 5], &mut o).unwrap();
    assert_eq!(balance_of(&eight, &o, 6)[0], (2, 2));
    assert!(o.is_balanced(6));
    let mut o = Orientation::empty(3);
    let err = orient_residual(&c4[..3], &[0, 1, 2], &mut o).unwrap_err();
    assert!(matches!(err, EulerError::OddDegree(NodeId(1), 1)));
}

#[test]
fn euler_orient_simple_cycle() {
    let g = cycle(6);
    let edges = g.edges().iter().map(|e| (e.u, e.v)).collect();
    let inst = EulerInstance::new(&g, 0, edges);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let rep = euler_orient(&mut engine, &inst).unwrap();
    assert!(rep.orientation.is_complete());
    assert!(rep.orientation.is_balanced(6));
}

#[test]
fn euler_orient_with_virtual_bridge() {
    let g = path(4);
    // Virtual node 5 bridges 1 and 4; with the path this closes a cycle.
    let edges = vec![
        (NodeId(1), NodeId(2)),
        (NodeId(2), NodeId(3)),
        (NodeId(3), NodeId(4)),
        (NodeId(4), NodeId(5)),
        (NodeId(1), NodeId(5)),
    ];
    let inst = EulerInstance::new(&g, 1, edges);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let rep = euler_orient(&mut engine, &inst).unwrap();
    assert!(rep.orientation.is_complete());
    assert_eq!(rep.orientation.degrees(5)[4], (1, 1));
}

#[test]
fn euler_orient_rejects_bad_instances() {
    let g = path(4);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let odd = EulerInstance::new(&g, 0, vec![(NodeId(1), NodeId(2))]);
    assert!(matches!(euler_orient(&mut engine, &odd), Err(EulerError::OddDegree(NodeId(1), 1))));
    let off = EulerInstance::new(&g, 0, vec![(NodeId(1), NodeId(3))]);
    assert!(matches!(euler_orient(&mut engine, &off), Err(EulerError::NotAHostEdge(..))));
    let dup = EulerInstance::new(&g, 0, vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(1))]);
    assert!(matches!(euler_orient(&mut engine, &dup), Err(EulerError::DuplicateEdge(..))));
    let many = EulerInstance::new(&g, 100, vec![]);
    assert!(matches!(euler_orient(&mut engine, &many), Err(EulerError::TooManyVirtualNodes { .. })));
}

/// Budget for a full oracle call: `C_EULER * ceil(log2 n)^3` rounds.
const C_EULER: u64 = 1;

#[test]
fn random_eulerian_instance_on_64() {
    let g = random(64, 13);
    let inst = random_eulerian_instance(&g, 4, 20, 13);
    inst.validate().unwrap();
    let mut engine = Engine::new(&g, HybridConfig::default());
    let rep = euler_orient(&mut engine, &inst).unwrap();
    assert!(rep.orientation.is_complete());
    assert!(rep.orientation.is_balanced(inst.node_count()));
    let log = log2_ceil(64) as u64;
    assert!(engine.ledger().rounds() <= C_EULER * log.pow(3), "{}", engine.ledger().rounds());
}

fn is_forest(edges: &[(NodeId, NodeId)], idx: &[usize], nodes: usize) -> bool {
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    for &i in idx {
        let (a, b) = edges[i];
        let (ra, rb) = (find(&mut parent, a.index()), find(&mut parent, b.index()));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

#[test]
fn decomposition_export_lines() {
    let g = path(4);
    let d = network_decomposition(&power_graph(&g), 1);
    let mut buf = Vec::new();
    write_decomposition(&mut buf, &d).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.split(' ').count() == 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_instances_orient_balanced(seed in 0u64..10_000, virt in 0usize..6) {
        let n = 20 + (seed % 30) as usize;
        let g = random(n, seed);
        let inst = random_eulerian_instance(&g, virt, 10, seed);
        inst.validate().unwrap();
        let mut engine = Engine::new(&g, HybridConfig::default().with_seed(seed));
        let rep = euler_orient(&mut engine, &inst).unwrap();
        prop_assert!(rep.orientation.is_complete());
        prop_assert!(rep.orientation.is_balanced(inst.node_count()));
        let ins: usize = rep.orientation.degrees(inst.node_count()).iter().map(|d| d.0).sum();
        prop_assert_eq!(ins, inst.edges.len());
        let mut buf = Vec::new();
        write_orientation(&mut buf, &rep.orientation).unwrap();
        prop_assert_eq!(String::from_utf8(buf).unwrap().lines().count(), inst.edges.len());
    }

    #[test]
    fn residual_is_a_union_of_color_forests(seed in 0u64..10_000) {
        let n = 20 + (seed % 40) as usize;
        let g = random(n, seed);
        let inst = random_eulerian_instance(&g, 0, 15, seed);
        let mut engine = Engine::new(&g, HybridConfig::default().with_seed(seed));
        let rep = euler_orient(&mut engine, &inst).unwrap();
        prop_assert!(rep.forests.deferred.is_empty());
        prop_assert!(rep.forests.per_color.len() <= rep.decomposition.colors);
        for forest in &rep.forests.per_color {
            prop_assert!(is_forest(&inst.edges, forest, n));
        }
    }

    #[test]
    fn cycle_removal_preserves_parity(seed in 0u64..10_000) {
        let g = random(30, seed);
        let inst = random_eulerian_instance(&g, 0, 12, seed);
        let all: Vec<usize> = (0..inst.edges.len()).collect();
        let mut o = Orientation::empty(inst.edges.len());
        // Only half of the edges are visible to the cluster.
        let half: Vec<usize> = all.iter().copied().filter(|i| i % 2 == 0).collect();
        orient_cluster_cycles(&inst.edges, &half, &mut o);
        prop_assert!(o.is_balanced(30));
        let mut deg = [0usize; 31];
        for (i, &(a, b)) in inst.edges.iter().enumerate() {
            if o.arcs[i].is_none() {
                deg[a.index()] += 1;
                deg[b.index()] += 1;
            }
        }
        prop_assert!(deg.iter().all(|d| d % 2 == 0));
    }
}
