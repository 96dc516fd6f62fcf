use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::engine::{Engine, HybridConfig};
use crate::graph::{generate_graph, Edge, GraphKind, GraphSpec, WeightRange};

fn path(n: usize) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::Path, n, 0).with_weights(WeightRange::UNIT)).unwrap()
}

fn random_graph(n: usize, seed: u64) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::RandomConnected { p: 0.15 }, n, seed)).unwrap()
}

fn random_choices(g: &WeightedGraph, seed: u64, p: f64) -> ContractionChoice {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ContractionChoice::new(g, (0..g.edge_count()).map(|_| rng.gen_bool(p)).collect()).unwrap()
}

/// Reachability over ⊤ edges by repeated relaxation; independent of the
/// union-find inside `contract`.
fn label_oracle(g: &WeightedGraph, c: &ContractionChoice) -> Vec<usize> {
    let mut label: Vec<usize> = (0..g.node_count()).collect();
    loop {
        let mut changed = false;
        for (i, e) in g.edges().iter().enumerate() {
            if c.is_contracted(i) {
                let m = label[e.u.index()].min(label[e.v.index()]);
                for x in [e.u.index(), e.v.index()] {
                    if label[x] != m {
                        label[x] = m;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

#[test]
fn contract_path_prefix() {
    let g = path(3);
    let c = ContractionChoice::new(&g, vec![true, false]).unwrap();
    let m = contract(&g, &c);
    assert_eq!(m.supernodes(), &[vec![NodeId(1), NodeId(2)], vec![NodeId(3)]]);
    assert_eq!(m.cross_edges().len(), 1);
    assert_eq!(m.cross_edges()[0], CrossEdge { edge: 1, a: 0, b: 1 });
}

#[test]
fn all_bottom_is_identity() {
    let g = random_graph(20, 3);
    let m = contract(&g, &ContractionChoice::none(&g));
    assert_eq!(m.supernodes().len(), 20);
    assert_eq!(m.cross_edges().len(), g.edge_count());
}

#[test]
fn choices_must_cover_all_edges() {
    let g = path(3);
    assert!(matches!(ContractionChoice::new(&g, vec![true]), Err(MinorError::LengthMismatch { expected: 2, got: 1 })));
}

#[test]
fn contract_matches_label_oracle() {
    let g = random_graph(32, 5);
    let c = random_choices(&g, 9, 0.4);
    let m = contract(&g, &c);
    let oracle = label_oracle(&g, &c);
    for u in g.nodes() {
        for v in g.nodes() {
            assert_eq!(m.supernode_of(u) == m.supernode_of(v), oracle[u.index()] == oracle[v.index()]);
        }
    }
    let expected_cross = g.edges().iter().filter(|e| oracle[e.u.index()] != oracle[e.v.index()]).count();
    assert_eq!(m.cross_edges().len(), expected_cross);
}

#[test]
fn overlay_tree_shapes() {
    let one = build_overlay_tree(&[NodeId(4)], &[]).unwrap();
    assert_eq!(one.depth(), 0);
    let ids: Vec<NodeId> = (1..=7).map(NodeId).collect();
    let chain: Vec<(NodeId, NodeId)> = ids.windows(2).map(|w| (w[0], w[1])).collect();
    assert!(build_overlay_tree(&ids, &chain).unwrap().depth() <= 3);
    let ids: Vec<NodeId> = (1..=100).rev().map(NodeId).collect();
    let chain: Vec<(NodeId, NodeId)> = ids.windows(2).map(|w| (w[0], w[1])).collect();
    let t = build_overlay_tree(&ids, &chain).unwrap();
    assert!(t.depth() <= 7);
    assert!(t.max_degree() <= 3);
    // Walking parents from every member reaches the root within depth steps.
    for &v in t.members() {
        let mut x = v;
        let mut steps = 0;
        while let Some(p) = t.parent(x) {
            x = p;
            steps += 1;
        }
        assert_eq!(x, t.root());
        assert!(steps <= t.depth());
    }
}

#[test]
fn overlay_rejects_disconnected_members() {
    let err = build_overlay_tree(&[NodeId(1), NodeId(2), NodeId(3)], &[(NodeId(1), NodeId(2))]).unwrap_err();
    assert!(matches!(err, MinorError::DisconnectedMembers));
}

#[test]
fn operators_have_identities() {
    for op in [AggregationOperator::Min, AggregationOperator::Max, AggregationOperator::Sum, AggregationOperator::Or] {
        for x in [0u64, 1, 17, 1 << 40] {
            assert_eq!(op.combine(op.identity(), Dist::Finite(x)), Dist::Finite(x), "{}", op.name());
        }
    }
    assert!(AggregationOperator::Or.check(Dist::Infinite).is_err());
}

#[test]
fn consensus_examples() {
    let g = path(2);
    let m = contract(&g, &ContractionChoice::all(&g));
    let y = consensus(&m, &[Dist::Finite(3), Dist::Finite(7)], AggregationOperator::Min).unwrap();
    assert_eq!(y, vec![Dist::Finite(3); 2]);
    let m = contract(&g, &ContractionChoice::none(&g));
    let y = consensus(&m, &[Dist::Finite(3), Dist::Finite(7)], AggregationOperator::Min).unwrap();
    assert_eq!(y, vec![Dist::Finite(3), Dist::Finite(7)]);
    let err = consensus(&m, &[Dist::Infinite, Dist::Finite(1)], AggregationOperator::Or).unwrap_err();
    assert!(matches!(err, MinorError::DomainMismatch { .. }));
}

#[test]
fn consensus_sum_on_twenty_nodes() {
    let g = path(20);
    let m = contract(&g, &ContractionChoice::all(&g));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<Dist> = (0..20).map(|_| Dist::Finite(rng.gen_range(0..1000))).collect();
    let expected: u64 = xs.iter().map(|d| d.finite().unwrap()).sum();
    let y = consensus(&m, &xs, AggregationOperator::Sum).unwrap();
    assert!(y.iter().all(|&v| v == Dist::Finite(expected)));
}

#[test]
fn aggregate_examples() {
    let g = path(3);
    let c = ContractionChoice::new(&g, vec![true, false]).unwrap();
    let m = contract(&g, &c);
    let out = aggregate(&m, &g, &[Some((Dist::Finite(5), Dist::Finite(9)))], AggregationOperator::Min).unwrap();
    assert_eq!(out, vec![Dist::Finite(5), Dist::Finite(5), Dist::Finite(9)]);
    let all = contract(&g, &ContractionChoice::all(&g));
    assert_eq!(aggregate(&all, &g, &[], AggregationOperator::Min).unwrap(), vec![Dist::Infinite; 3]);
    assert!(matches!(aggregate(&m, &g, &[None], AggregationOperator::Min), Err(MinorError::MissingEdgeValue { .. })));
}

#[test]
fn aggregate_star_contraction_sum() {
    // Contract every edge touching node 1 of a random 16-node graph.
    let g = random_graph(16, 4);
    let flags = g.edges().iter().map(|e| e.u == NodeId(1) || e.v == NodeId(1)).collect();
    let c = ContractionChoice::new(&g, flags).unwrap();
    let m = contract(&g, &c);
    let z: Vec<Option<(Dist, Dist)>> =
        m.cross_edges().iter().map(|ce| Some((Dist::Finite(ce.edge as u64), Dist::Finite(1)))).collect();
    let out = aggregate(&m, &g, &z, AggregationOperator::Sum).unwrap();
    let oracle = label_oracle(&g, &c);
    for v in g.nodes() {
        let mut expected = 0;
        for (i, e) in g.edges().iter().enumerate() {
            let (a, b) = (oracle[e.u.index()], oracle[e.v.index()]);
            if a == b {
                continue;
            }
            if a == oracle[v.index()] {
                expected += i as u64;
            }
            if b == oracle[v.index()] {
                expected += 1;
            }
        }
        assert_eq!(out[v.index()], Dist::Finite(expected));
    }
}

fn far_value<'a>() -> Box<dyn Fn(&Edge, Dist, Dist) -> (Dist, Dist) + 'a> {
    Box::new(|_e: &Edge, yu: Dist, yv: Dist| (yv, yu))
}

#[test]
fn ma_round_hand_example() {
    let g = path(3);
    let c = ContractionChoice::new(&g, vec![true, false]).unwrap();
    // ceil(log2 3)^2 = 4 bits cannot carry a header, so widen γ.
    let mut engine = Engine::new(&g, HybridConfig::default().with_gamma_bits(64));
    let inst = MaInstance {
        inputs: (1..=3).map(Dist::Finite).collect(),
        consensus: AggregationOperator::Min,
        aggregation: AggregationOperator::Min,
        edge_value: far_value(),
    };
    let out = ma_round(&mut engine, &c, inst).unwrap();
    assert_eq!(out.consensus, vec![Dist::Finite(1), Dist::Finite(1), Dist::Finite(3)]);
    assert_eq!(out.aggregate, vec![Dist::Finite(3), Dist::Finite(3), Dist::Finite(1)]);
    let ledger = engine.ledger();
    assert!(ledger.rounds_in_phase("ma.contract") > 0);
    assert_eq!(ledger.rounds_in_phase("ma.aggregate"), 1 + ledger.rounds_in_phase("ma.consensus"));
}

#[test]
fn ma_round_all_bottom_keeps_inputs() {
    let g = random_graph(24, 1);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let xs: Vec<Dist> = (0..24).map(|i| Dist::Finite(i * 3 + 1)).collect();
    let inst = MaInstance {
        inputs: xs.clone(),
        consensus: AggregationOperator::Min,
        aggregation: AggregationOperator::Min,
        edge_value: far_value(),
    };
    let out = ma_round(&mut engine, &ContractionChoice::none(&g), inst).unwrap();
    assert_eq!(out.consensus, xs);
    assert_eq!(engine.ledger().rounds_in_phase("ma.contract"), 0);
}

#[test]
fn ma_round_rejects_wide_values() {
    let g = path(4);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let inst = MaInstance {
        inputs: vec![Dist::Finite(1 << 20); 4],
        consensus: AggregationOperator::Min,
        aggregation: AggregationOperator::Min,
        edge_value: far_value(),
    };
    assert!(matches!(ma_round(&mut engine, &ContractionChoice::all(&g), inst), Err(MinorError::ValueTooWide { .. })));
}

#[test]
fn repeated_rounds_stay_polylogarithmic() {
    let n = 64;
    let g = random_graph(n, 8);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let mut session = MaSession::new();
    for r in 0..10u64 {
        let c = random_choices(&g, 100 + r, 0.6);
        let inst = MaInstance {
            inputs: (0..n as u64).map(|i| Dist::Finite((i * 7 + r) % 50)).collect(),
            consensus: AggregationOperator::Sum,
            aggregation: AggregationOperator::Max,
            edge_value: Box::new(|e: &Edge, yu: Dist, yv: Dist| (yv + e.weight, yu + e.weight)),
        };
        session.round(&mut engine, &c, std::slice::from_ref(&inst)).unwrap();
    }
    // Per round: overlay charge 2 log n, two folds of at most 4 (depth + 1)
    // rounds each, one exchange round.
    let log = crate::graph::log2_ceil(n) as u64;
    let c_round = 2 * log + 2 * 4 * (log + 1) + 1;
    assert!(engine.ledger().rounds() <= 10 * c_round, "{}", engine.ledger().rounds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_round_equals_sequential(seed in 0u64..1000, p in 0.0f64..1.0, ops in 0usize..4) {
        let all = [AggregationOperator::Min, AggregationOperator::Max, AggregationOperator::Sum, AggregationOperator::Or];
        let n = 12 + (seed % 20) as usize;
        let g = random_graph(n, seed);
        let c = random_choices(&g, seed ^ 0xabc, p);
        let make = || MaInstance {
            inputs: (0..n as u64).map(|i| Dist::Finite((i * 31 + seed) % 64)).collect(),
            consensus: all[ops],
            aggregation: all[(ops + 1) % 4],
            edge_value: Box::new(|e: &Edge, yu: Dist, yv: Dist| (yv + e.weight % 8, yu + 1)),
        };
        let expected = evaluate_sequential(&g, &c, &make()).unwrap();
        let mut engine = Engine::new(&g, HybridConfig::default().with_gamma_bits(64));
        let got = ma_round(&mut engine, &c, make()).unwrap();
        prop_assert_eq!(&got, &expected);
        let m = contract(&g, &c);
        for members in m.supernodes() {
            let v0 = got.aggregate[members[0].index()];
            prop_assert!(members.iter().all(|v| got.aggregate[v.index()] == v0));
        }
    }

    #[test]
    fn consensus_ignores_member_order(seed in 0u64..1000) {
        let g = path(10);
        let m = contract(&g, &ContractionChoice::all(&g));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Dist> = (0..10).map(|_| Dist::Finite(rng.gen_range(0..100))).collect();
        let mut rev = xs.clone();
        rev.reverse();
        for op in [AggregationOperator::Min, AggregationOperator::Max, AggregationOperator::Sum, AggregationOperator::Or] {
            prop_assert_eq!(consensus(&m, &xs, op).unwrap(), consensus(&m, &rev, op).unwrap());
        }
    }

    #[test]
    fn overlay_trees_are_shallow(size in 1usize..300) {
        let ids: Vec<NodeId> = (1..=size as u32).map(NodeId).collect();
        let chain: Vec<(NodeId, NodeId)> = ids.windows(2).map(|w| (w[0], w[1])).collect();
        let t = build_overlay_tree(&ids, &chain).unwrap();
        prop_assert!(t.max_degree() <= 3);
        prop_assert!(t.depth() <= crate::graph::log2_ceil(size) + 1);
    }
}
