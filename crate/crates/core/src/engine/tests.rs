use super::*;
use crate::graph::{generate_graph, GraphKind, GraphSpec, WeightRange};
use rand::Rng;

fn path(n: usize) -> WeightedGraph {
    generate_graph(&GraphSpec::new(GraphKind::Path, n, 0).with_weights(WeightRange::UNIT)).unwrap()
}

/// Sends a fixed list of global messages in the start step, then halts.
#[derive(Debug)]
struct Sender {
    sends: Vec<(NodeId, Bits)>,
    received: Vec<(NodeId, u64)>,
}

impl NodeProgram for Sender {
    type Msg = Bits;
    fn step(&mut self, ctx: &mut Context<'_, Bits>) {
        if ctx.round() == 0 {
            for (to, b) in self.sends.drain(..) {
                ctx.send_global(to, b);
            }
        }
        for (from, b) in ctx.global_inbox() {
            self.received.push((*from, b.0));
        }
        ctx.halt();
    }
}

fn senders(n: usize, f: impl Fn(usize) -> Vec<(NodeId, Bits)>) -> Vec<Sender> {
    (0..n).map(|i| Sender { sends: f(i), received: Vec::new() }).collect()
}

#[test]
fn global_message_is_delivered_next_round() {
    let g = path(4);
    assert_eq!(Engine::new(&g, HybridConfig::default()).limits().gamma, 4);
    let mut engine = Engine::new(&g, HybridConfig { header_bits: Some(0), ..HybridConfig::default() });
    let gamma = engine.limits().gamma;
    let progs = senders(4, |i| if i == 0 { vec![(NodeId(3), Bits(gamma))] } else { vec![] });
    let done = engine.run(progs).unwrap();
    assert_eq!(done[2].received, vec![(NodeId(1), gamma)]);
    let ledger = engine.ledger();
    assert_eq!(ledger.rounds(), 1);
    let row = &ledger.rows()[0];
    let a = row.tallies.iter().find(|(n, _)| *n == NodeId(1)).unwrap().1;
    let b = row.tallies.iter().find(|(n, _)| *n == NodeId(3)).unwrap().1;
    assert_eq!(a.global_sent, gamma);
    assert_eq!(b.global_recv, gamma);
}

#[test]
fn strict_send_cap_names_the_sender() {
    let g = path(4);
    let mut engine = Engine::new(&g, HybridConfig { header_bits: Some(0), ..HybridConfig::default() });
    let gamma = engine.limits().gamma;
    let progs = senders(4, |i| {
        if i == 1 {
            vec![(NodeId(4), Bits(gamma)), (NodeId(3), Bits(gamma))]
        } else {
            vec![]
        }
    });
    let err = engine.run(progs).unwrap_err();
    assert_eq!(err, EngineError::GlobalSendCap { node: NodeId(2), round: 1, bits: 2 * gamma, cap: gamma });
}

#[test]
fn receive_cap_threshold() {
    // Every node sends one message to node 1. With header h and payload p,
    // the receive cap breaks exactly when (n - 1) * (h + p) > gamma.
    let n = 16;
    let g = generate_graph(&GraphSpec::new(GraphKind::Cycle, n, 0)).unwrap();
    let cfg = HybridConfig { gamma: GammaSpec::Bits(100), header_bits: Some(8), ..HybridConfig::default() };
    let payload = 2u64;
    let per_msg = 8 + payload;
    let fits = (100 / per_msg) as usize; // 10 messages fit
    for senders_count in [fits, fits + 1] {
        let mut engine = Engine::new(&g, cfg);
        let progs = senders(n, |i| {
            if i >= 1 && i <= senders_count { vec![(NodeId(1), Bits(payload))] } else { vec![] }
        });
        let res = engine.run(progs);
        if senders_count * per_msg as usize > 100 {
            assert!(matches!(res, Err(EngineError::GlobalReceiveCap { node: NodeId(1), .. })));
        } else {
            assert!(res.is_ok());
        }
    }
}

#[test]
fn adversarial_mode_drops_and_continues() {
    let g = path(4);
    let cfg = HybridConfig {
        header_bits: Some(0),
        gamma: GammaSpec::Bits(10),
        violation_mode: ViolationMode::Adversarial,
        ..HybridConfig::default()
    };
    let mut engine = Engine::new(&g, cfg);
    let progs = senders(4, |i| if i > 0 { vec![(NodeId(1), Bits(4))] } else { vec![] });
    let done = engine.run(progs).unwrap();
    // Three 4-bit messages, cap 10: the largest sender (4) is dropped.
    assert_eq!(done[0].received, vec![(NodeId(2), 4), (NodeId(3), 4)]);
    assert_eq!(engine.dropped_messages(), 1);
    let ledger = engine.ledger();
    assert_eq!(ledger.total_global_sent(), ledger.total_global_recv());
    assert_eq!(ledger.total_global_recv(), 8);
}

struct Halter;
impl NodeProgram for Halter {
    type Msg = ();
    fn step(&mut self, ctx: &mut Context<'_, ()>) {
        if ctx.round() >= 1 {
            ctx.halt();
        }
    }
}

#[test]
fn halting_in_round_one_gives_one_row() {
    let g = path(3);
    let mut engine = Engine::new(&g, HybridConfig::default());
    engine.run(vec![Halter, Halter, Halter]).unwrap();
    assert_eq!(engine.ledger().rounds(), 1);
}

/// Floods a token from node 1 over the local network.
#[derive(Default)]
struct Flood {
    has: bool,
}

impl NodeProgram for Flood {
    type Msg = ();
    fn step(&mut self, ctx: &mut Context<'_, ()>) {
        let fresh = if ctx.round() == 0 { ctx.node() == NodeId(1) } else { !self.has && !ctx.local_inbox().is_empty() };
        if fresh {
            self.has = true;
            for a in ctx.graph().neighbors(ctx.node()) {
                if !ctx.local_inbox().iter().any(|(f, _)| *f == a.node) {
                    ctx.send_local(a.node, ());
                }
            }
        }
        ctx.halt();
    }
}

#[test]
fn flooding_a_path_takes_diameter_rounds() {
    let g = path(5);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let done = engine.run((0..5).map(|_| Flood::default()).collect()).unwrap();
    assert!(done.iter().all(|f| f.has));
    assert_eq!(engine.ledger().rounds(), 4);
}

#[derive(Debug)]
struct BadLocal;
impl NodeProgram for BadLocal {
    type Msg = ();
    fn step(&mut self, ctx: &mut Context<'_, ()>) {
        if ctx.round() == 0 && ctx.node() == NodeId(1) {
            ctx.send_local(NodeId(3), ());
        }
        ctx.halt();
    }
}

#[test]
fn local_messages_need_an_edge() {
    let g = path(3);
    let mut engine = Engine::new(&g, HybridConfig::default());
    let err = engine.run(vec![BadLocal, BadLocal, BadLocal]).unwrap_err();
    assert_eq!(err, EngineError::NotANeighbor { from: NodeId(1), to: NodeId(3), round: 1 });
}

#[derive(Debug)]
struct Forever;
impl NodeProgram for Forever {
    type Msg = ();
    fn step(&mut self, _ctx: &mut Context<'_, ()>) {}
}

#[test]
fn timeout_is_distinct_from_violation() {
    let g = path(2);
    let mut engine = Engine::new(&g, HybridConfig { max_rounds: 5, ..HybridConfig::default() });
    assert_eq!(engine.run(vec![Forever, Forever]).unwrap_err(), EngineError::Timeout { max_rounds: 5 });
}

#[test]
fn local_cap_is_enforced_when_finite() {
    let g = path(2);
    struct Chatty;
    impl NodeProgram for Chatty {
        type Msg = Bits;
        fn step(&mut self, ctx: &mut Context<'_, Bits>) {
            if ctx.round() == 0 && ctx.node() == NodeId(1) {
                ctx.send_local(NodeId(2), Bits(10));
            }
            ctx.halt();
        }
    }
    let cfg = HybridConfig { lambda: Bandwidth::Bits(8), header_bits: Some(0), ..HybridConfig::default() };
    let mut engine = Engine::new(&g, cfg);
    assert!(matches!(engine.run(vec![Chatty, Chatty]), Err(EngineError::LocalEdgeCap { .. })));
    // Unlimited local bandwidth records but never rejects.
    let mut engine = Engine::new(&g, HybridConfig { header_bits: Some(0), ..HybridConfig::default() });
    engine.run(vec![Chatty, Chatty]).unwrap();
    assert_eq!(engine.ledger().rows()[0].tallies[0].1.local_sent, 10);
}

/// Random gossip: each round a node forwards the max value it knows to a
/// random node over the global network.
struct Gossip {
    value: u64,
    rounds: u64,
}

impl NodeProgram for Gossip {
    type Msg = u64;
    fn step(&mut self, ctx: &mut Context<'_, u64>) {
        for (_, v) in ctx.global_inbox() {
            self.value = self.value.max(*v);
        }
        if ctx.round() < self.rounds {
            let n = ctx.graph().node_count();
            let to = NodeId(ctx.rng().gen_range(1..=n as u32));
            ctx.send_global(to, self.value);
        } else {
            ctx.halt();
        }
    }
}

fn gossip_run(seed: u64) -> (Vec<u64>, RoundLedger) {
    let g = generate_graph(&GraphSpec::new(GraphKind::RandomConnected { p: 0.1 }, 32, 1)).unwrap();
    let cfg = HybridConfig {
        violation_mode: ViolationMode::Adversarial,
        seed,
        ..HybridConfig::default()
    };
    let mut engine = Engine::new(&g, cfg);
    let progs = (0..32).map(|i| Gossip { value: i as u64 * 7 % 32, rounds: 12 }).collect();
    let done = engine.run(progs).unwrap();
    (done.iter().map(|p| p.value).collect(), engine.into_ledger())
}

#[test]
fn runs_are_deterministic_and_ledger_is_sound() {
    let (a, la) = gossip_run(5);
    let (b, lb) = gossip_run(5);
    assert_eq!(a, b);
    assert_eq!(la, lb);
    assert_eq!(la.total_global_sent(), la.total_global_recv());
    let (c, _) = gossip_run(6);
    assert_ne!(a, c);
}

#[test]
fn serialized_sends_respect_both_caps() {
    let g = path(4);
    let mut engine = Engine::new(&g, HybridConfig { gamma: GammaSpec::Bits(10), ..HybridConfig::default() });
    let packets: Vec<GlobalPacket> = (0..3)
        .map(|i| GlobalPacket { from: NodeId(2 + i), to: NodeId(1), bits: 6 })
        .chain([GlobalPacket { from: NodeId(1), to: NodeId(4), bits: 6 }])
        .collect();
    let (rounds, at) = engine.send_serialized(&packets).unwrap();
    assert_eq!(rounds, 3);
    assert_eq!(at, vec![1, 2, 3, 1]);
    assert!(engine.ledger().max_global_recv() <= 10);
    let too_big = [GlobalPacket { from: NodeId(1), to: NodeId(2), bits: 11 }];
    assert!(matches!(engine.send_serialized(&too_big), Err(EngineError::MessageTooLarge { .. })));
}

#[test]
fn ledger_csv_has_expected_columns() {
    let (_, ledger) = gossip_run(1);
    let mut buf = Vec::new();
    ledger.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("round,phase,node,global_sent_bits,global_recv_bits,local_bits\n"));
}
