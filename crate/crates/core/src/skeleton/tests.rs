use proptest::prelude::*;

use super::*;
use crate::engine::HybridConfig;
use crate::graph::{
    dijkstra_oracle, generate_graph, hop_distances_from, hop_limited_distances, log2_ceil, GraphKind, GraphSpec,
    WeightRange,
};

fn path(n: usize) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::Path, n, 0).with_weights(WeightRange::UNIT)).unwrap()
}

fn random(n: usize, seed: u64) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::RandomConnected { p: 4.0 / n as f64 }, n, seed)).unwrap()
}

#[test]
fn sampling_examples() {
    assert_eq!(sample_skeleton(10, 1.0, 3).unwrap().len(), 10);
    assert_eq!(sample_skeleton(1024, 0.25, 17).unwrap(), sample_skeleton(1024, 0.25, 17).unwrap());
    let k = sample_skeleton(1024, 0.25, 17).unwrap().len() as f64;
    let sigma = (1024.0f64 * 0.25 * 0.75).sqrt();
    assert!((k - 256.0).abs() <= 4.0 * sigma, "{k}");
    assert!(matches!(sample_skeleton(4, 0.0, 1), Err(SkeletonError::BadProbability(_))));
    assert!(matches!(sample_skeleton(4, 1.5, 1), Err(SkeletonError::BadProbability(_))));
}

#[test]
fn build_examples() {
    let g = WeightedGraph::new(2, 5, &[(1, 2, 3)]).unwrap();
    let mut engine = Engine::new(&g, HybridConfig::default());
    let s = build_skeleton(&mut engine, &[NodeId(1), NodeId(2)], 1).unwrap();
    assert_eq!(s.edges(), &[(NodeId(1), NodeId(2), 3)]);
    assert_eq!(engine.ledger().rounds(), 1);

    let g = path(4);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let s = build_skeleton(&mut engine, &[NodeId(1), NodeId(4)], 2).unwrap();
    assert!(s.edges().is_empty());
    assert_eq!(engine.ledger().rounds_in_phase("skeleton.build"), 2);
    assert!(matches!(build_skeleton(&mut engine, &[NodeId(1)], 0), Err(SkeletonError::ZeroHopRadius)));
}

#[test]
fn grid_skeleton_distances_match_dijkstra() {
    let g = generate_graph(&GraphSpec::grid(8, 8, 21)).unwrap();
    let members = sample_skeleton(64, 0.25, 21).unwrap();
    let h = hop_radius(C_H, 4.0, 64);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let s = build_skeleton(&mut engine, &members, h).unwrap();
    assert_eq!(engine.ledger().rounds(), h as u64);
    for &u in s.nodes() {
        let dg = dijkstra_oracle(&g, u).unwrap();
        let ds = s.distances_from(u);
        for (j, &v) in s.nodes().iter().enumerate() {
            assert_eq!(ds[j], dg.get(v), "{u} {v}");
        }
    }
    assert!(check_path_cover(&g, &members, h).is_ok());
}

#[test]
fn path_cover_examples() {
    let g = path(6);
    let all: Vec<NodeId> = g.nodes().collect();
    assert!(check_path_cover(&g, &all, 1).is_ok());
    assert!(check_path_cover(&g, &[], 3).is_err());
    // Six nodes never need more than six.
    assert!(check_path_cover(&g, &[], 7).is_ok());
    // Every window of two nodes on 1..6 hits {2, 4, 6}.
    assert!(check_path_cover(&g, &[NodeId(2), NodeId(4), NodeId(6)], 2).is_ok());
    assert_eq!(check_path_cover(&g, &[NodeId(3)], 2), Err((NodeId(1), NodeId(2))));
}

#[test]
fn path_cover_holds_on_grids_across_seeds() {
    let h = hop_radius(C_H, 4.0, 64);
    for seed in 0..20 {
        let g = generate_graph(&GraphSpec::grid(8, 8, seed)).unwrap();
        let members = sample_skeleton(64, 0.25, seed).unwrap();
        assert!(check_path_cover(&g, &members, h).is_ok(), "seed {seed}");
    }
}

/// Direct check of the three helper-set properties.
fn check_family(g: &WeightedGraph, fam: &HelperFamily, ws: &[NodeId]) {
    let cap = C_HELP * log2_ceil(g.node_count()) as usize;
    let mut count = vec![0; g.node_count()];
    for &w in ws {
        let set = fam.get(w).expect("every w has a set");
        assert!(set.len() >= fam.mu);
        let hops = hop_distances_from(g, w);
        for v in set {
            assert!(hops[v.index()] as usize <= fam.mu);
            count[v.index()] += 1;
        }
    }
    assert!(count.iter().all(|&c| c <= cap));
}

#[test]
fn helper_examples() {
    let g = path(10);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let fam = compute_helper_sets(&mut engine, &[NodeId(5)], 1.0).unwrap();
    // μ = 2 * 1 * ceil(log2 10) = 8 nearest nodes, ties by id: 5, 4, 6, 3, 7, 2, 8, 1.
    assert_eq!(fam.mu, 8);
    assert_eq!(fam.get(NodeId(5)).unwrap(), &(1..=8).map(NodeId).collect::<Vec<_>>()[..]);

    // Two far-apart roots on a long path get disjoint sets.
    let g = path(200);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let fam = compute_helper_sets(&mut engine, &[NodeId(1), NodeId(200)], 1.0).unwrap();
    let a = fam.get(NodeId(1)).unwrap();
    let b = fam.get(NodeId(200)).unwrap();
    assert!(a.iter().all(|v| !b.contains(v)));
    assert!(engine.ledger().rounds_in_phase("helpers") > 0);
}

#[test]
fn helper_size_falls_back_to_n() {
    let g = path(5);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let fam = compute_helper_sets(&mut engine, &[NodeId(1)], 10.0).unwrap();
    assert_eq!(fam.mu, 5);
    assert_eq!(fam.get(NodeId(1)).unwrap().len(), 5);
}

#[test]
fn helper_family_on_random_256() {
    let g = random(256, 23);
    let ws = sample_skeleton(256, 0.25, 23).unwrap();
    let mut engine = Engine::new(&g, HybridConfig::default());
    let fam = compute_helper_sets(&mut engine, &ws, 4.0).unwrap();
    check_family(&g, &fam, &ws);
}

#[test]
fn exports() {
    let g = path(4);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let s = build_skeleton(&mut engine, &[NodeId(1), NodeId(3)], 3).unwrap();
    let mut edges = Vec::new();
    s.write_edges(&mut edges).unwrap();
    assert_eq!(String::from_utf8(edges).unwrap(), "2 1\n1 3 2\n");
    let mut flags = Vec::new();
    s.write_flags(&mut flags).unwrap();
    assert_eq!(String::from_utf8(flags).unwrap(), "1 1\n2 0\n3 1\n4 0\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn skeleton_is_sound_and_complete(seed in 0u64..10_000, h in 1u32..8, p in 0.1f64..1.0) {
        let n = 20 + (seed % 40) as usize;
        let g = random(n, seed);
        let members = sample_skeleton(n, p, seed).unwrap();
        let mut engine = Engine::new(&g, HybridConfig::default());
        let s = build_skeleton(&mut engine, &members, h).unwrap();
        prop_assert_eq!(engine.ledger().rounds(), h as u64);
        for &u in s.nodes() {
            let lim = hop_limited_distances(&g, u, h).unwrap();
            let hops = hop_distances_from(&g, u);
            for &v in s.nodes() {
                if v == u {
                    continue;
                }
                match s.weight(u, v) {
                    Some(w) => prop_assert_eq!(Dist::Finite(w), lim.get(v)),
                    None => prop_assert!(hops[v.index()] > h),
                }
            }
        }
        // Every node's view matches the hop-limited oracle too.
        for v in g.nodes() {
            for &(u, d) in s.known_from(v) {
                prop_assert_eq!(Dist::Finite(d), hop_limited_distances(&g, u, h).unwrap().get(v));
            }
        }
    }

    #[test]
    fn helper_properties_hold(seed in 0u64..10_000, x in 1.0f64..6.0) {
        let n = 60 + (seed % 80) as usize;
        let g = random(n, seed);
        let ws = sample_skeleton(n, 1.0 / x, seed).unwrap();
        let mut engine = Engine::new(&g, HybridConfig::default());
        let fam = compute_helper_sets(&mut engine, &ws, x).unwrap();
        check_family(&g, &fam, &ws);
    }
}
