//! Round-synchronous execution of per-node programs with HYBRID(λ, γ)
//! bandwidth caps.
//!
//! A round transmits the messages queued by the previous step, checks them
//! against the caps, delivers them, appends a ledger row, and then steps
//! every node that is still active or has mail. Programs run an initial
//! step (round 0) when the network is started; that step may send but is
//! not a communication round.

mod adversary;
mod ledger;

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adversary::{adversary_drop, AdversaryPolicy, Candidate, DropLargestFirst, RandomDrop};
pub use ledger::{NodeTally, PhaseSummary, RoundLedger, RoundRecord};

use crate::error::EngineError;
use crate::graph::{log2_ceil, NodeId, WeightedGraph};
use crate::rng::{derived_rng, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bandwidth {
    Unlimited,
    Bits(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaSpec {
    Bits(u64),
    /// `ceil(log2 n)^2`, the standard instantiation.
    Log2NSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationMode {
    Strict,
    Adversarial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub lambda: Bandwidth,
    pub gamma: GammaSpec,
    /// Per-message header bits; `None` means `2 * ceil(log2 n)`.
    pub header_bits: Option<u64>,
    pub violation_mode: ViolationMode,
    pub max_rounds: u64,
    pub seed: u64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            lambda: Bandwidth::Unlimited,
            gamma: GammaSpec::Log2NSquared,
            header_bits: None,
            violation_mode: ViolationMode::Strict,
            max_rounds: 1_000_000,
            seed: 0,
        }
    }
}

impl HybridConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gamma_bits(mut self, bits: u64) -> Self {
        self.gamma = GammaSpec::Bits(bits);
        self
    }

    pub fn resolve(&self, n: usize) -> Limits {
        let word = log2_ceil(n) as u64;
        Limits {
            lambda: match self.lambda {
                Bandwidth::Unlimited => None,
                Bandwidth::Bits(b) => Some(b),
            },
            gamma: match self.gamma {
                GammaSpec::Bits(b) => b,
                GammaSpec::Log2NSquared => word * word,
            },
            header_bits: self.header_bits.unwrap_or(2 * word),
            word_bits: word,
        }
    }
}

/// Caps resolved for a concrete network size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub lambda: Option<u64>,
    pub gamma: u64,
    pub header_bits: u64,
    /// `ceil(log2 n)`, one node id.
    pub word_bits: u64,
}

impl Limits {
    /// Size of a reference message carrying two O(log n)-bit words.
    pub fn standard_message_bits(&self) -> u64 {
        self.header_bits + 2 * self.word_bits
    }

    /// How many reference messages fit in γ per round (at least 1). Source
    /// counts are compared against this when choosing between pipelines.
    pub fn message_capacity(&self) -> u64 {
        (self.gamma / self.standard_message_bits()).max(1)
    }
}

/// Anything that can travel in a message.
pub trait Payload {
    fn payload_bits(&self) -> u64;
}

impl Payload for () {
    fn payload_bits(&self) -> u64 {
        0
    }
}

impl Payload for u64 {
    fn payload_bits(&self) -> u64 {
        crate::graph::bit_length(*self) as u64
    }
}

/// Raw-size payload, handy for tests and charged traffic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bits(pub u64);

impl Payload for Bits {
    fn payload_bits(&self) -> u64 {
        self.0
    }
}

/// A per-node state machine. `step` is called with round 0 once when the
/// network starts, then once per round in which the node is active or has
/// mail. Given identical state, inbox and randomness it must behave
/// identically.
pub trait NodeProgram {
    type Msg: Payload + Clone;
    fn step(&mut self, ctx: &mut Context<'_, Self::Msg>);
}

struct Outbox<M> {
    local: Vec<(NodeId, M)>,
    global: Vec<(NodeId, M)>,
}

impl<M> Default for Outbox<M> {
    fn default() -> Self {
        Outbox { local: Vec::new(), global: Vec::new() }
    }
}

/// What a node sees during one step.
pub struct Context<'a, M> {
    node: NodeId,
    round: u64,
    graph: &'a WeightedGraph,
    seed: u64,
    local_inbox: &'a [(NodeId, M)],
    global_inbox: &'a [(NodeId, M)],
    out: &'a mut Outbox<M>,
    halt: bool,
}

impl<'a, M> Context<'a, M> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    /// 0 for the start step, then the network's round number.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn graph(&self) -> &'a WeightedGraph {
        self.graph
    }

    pub fn local_inbox(&self) -> &[(NodeId, M)] {
        self.local_inbox
    }

    pub fn global_inbox(&self) -> &[(NodeId, M)] {
        self.global_inbox
    }

    pub fn send_local(&mut self, to: NodeId, msg: M) {
        self.out.local.push((to, msg));
    }

    pub fn send_global(&mut self, to: NodeId, msg: M) {
        self.out.global.push((to, msg));
    }

    /// Vote to halt; the node is woken again if mail arrives.
    pub fn halt(&mut self) {
        self.halt = true;
    }

    /// This node's private random stream for this round.
    pub fn rng(&self) -> ChaCha8Rng {
        derived_rng(self.seed, &[stream::NODE_STEP, self.node.0 as u64, self.round])
    }
}

/// Programs plus in-flight messages for one execution.
pub struct Network<P: NodeProgram> {
    programs: Vec<P>,
    outbox: Vec<Outbox<P::Msg>>,
    local_inbox: Vec<Vec<(NodeId, P::Msg)>>,
    global_inbox: Vec<Vec<(NodeId, P::Msg)>>,
    halted: Vec<bool>,
    rounds: u64,
}

impl<P: NodeProgram> Network<P> {
    pub fn programs(&self) -> &[P] {
        &self.programs
    }

    pub fn into_programs(self) -> Vec<P> {
        self.programs
    }

    /// Communication rounds executed on this network.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn is_done(&self) -> bool {
        self.halted.iter().all(|&h| h)
            && self.outbox.iter().all(|o| o.local.is_empty() && o.global.is_empty())
    }
}

/// Engine state shared by every phase of a pipeline: graph, caps, ledger.
pub struct Engine<'g> {
    graph: &'g WeightedGraph,
    config: HybridConfig,
    limits: Limits,
    ledger: RoundLedger,
    phase: String,
    policy: Box<dyn AdversaryPolicy>,
    dropped: u64,
}

/// Messages one node sends or receives in a round, for cap checks.
struct Pending<M> {
    from: NodeId,
    seq: u32,
    to: NodeId,
    bits: u64,
    msg: M,
}

impl<'g> Engine<'g> {
    pub fn new(graph: &'g WeightedGraph, config: HybridConfig) -> Self {
        let limits = config.resolve(graph.node_count());
        Engine {
            graph,
            config,
            limits,
            ledger: RoundLedger::new(),
            phase: "main".to_string(),
            policy: Box::new(DropLargestFirst),
            dropped: 0,
        }
    }

    pub fn with_policy(mut self, policy: Box<dyn AdversaryPolicy>) -> Self {
        self.policy = policy;
        self
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn config(&self) -> &HybridConfig {
        &self.config
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut RoundLedger {
        &mut self.ledger
    }

    pub fn into_ledger(self) -> RoundLedger {
        self.ledger
    }

    /// Messages removed by the adversary so far.
    pub fn dropped_messages(&self) -> u64 {
        self.dropped
    }

    /// Sets the label attached to subsequent ledger rows; returns the old one.
    pub fn set_phase(&mut self, phase: &str) -> String {
        std::mem::replace(&mut self.phase, phase.to_string())
    }

    pub fn phase(&self) -> &str {
        &self.phase
    }

    pub fn charge(&mut self, rounds: u64) {
        let phase = self.phase.clone();
        self.ledger.charge(&phase, rounds);
    }

    pub fn message_bits<M: Payload>(&self, msg: &M) -> u64 {
        self.limits.header_bits + msg.payload_bits()
    }

    /// Creates the network and runs every program's start step.
    pub fn start<P: NodeProgram>(&self, programs: Vec<P>) -> Network<P> {
        let n = self.graph.node_count();
        assert_eq!(programs.len(), n, "one program per node");
        let mut net = Network {
            programs,
            outbox: (0..n).map(|_| Outbox::default()).collect(),
            local_inbox: vec![Vec::new(); n],
            global_inbox: vec![Vec::new(); n],
            halted: vec![false; n],
            rounds: 0,
        };
        for i in 0..n {
            self.step_node(&mut net, i, 0);
        }
        net
    }

    fn step_node<P: NodeProgram>(&self, net: &mut Network<P>, i: usize, round: u64) {
        let mut out = std::mem::take(&mut net.outbox[i]);
        let mut ctx = Context {
            node: NodeId::from_index(i),
            round,
            graph: self.graph,
            seed: self.config.seed,
            local_inbox: &net.local_inbox[i],
            global_inbox: &net.global_inbox[i],
            out: &mut out,
            halt: false,
        };
        net.programs[i].step(&mut ctx);
        net.halted[i] = ctx.halt;
        net.outbox[i] = out;
    }

    /// One communication round: transmit, enforce caps, deliver, record,
    /// then step active nodes.
    pub fn run_round<P: NodeProgram>(&mut self, net: &mut Network<P>) -> Result<(), EngineError> {
        let n = self.graph.node_count();
        let round = self.ledger.rounds() + 1;
        let gamma = self.limits.gamma;
        let strict = self.config.violation_mode == ViolationMode::Strict;
        let mut tallies = vec![NodeTally::default(); n];

        // Global messages: sender cap, then receiver cap.
        let mut by_receiver: Vec<Vec<Pending<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
        for i in 0..n {
            let from = NodeId::from_index(i);
            let msgs = std::mem::take(&mut net.outbox[i].global);
            let mut pending: Vec<Pending<P::Msg>> = Vec::with_capacity(msgs.len());
            for (seq, (to, msg)) in msgs.into_iter().enumerate() {
                if !self.graph.contains(to) {
                    return Err(EngineError::UnknownDestination { to, round });
                }
                let bits = self.message_bits(&msg);
                pending.push(Pending { from, seq: seq as u32, to, bits, msg });
            }
            let total: u64 = pending.iter().map(|p| p.bits).sum();
            if total > gamma {
                if strict {
                    return Err(EngineError::GlobalSendCap { node: from, round, bits: total, cap: gamma });
                }
                pending = self.apply_policy(pending, from, round, 0);
            }
            for p in pending {
                by_receiver[p.to.index()].push(p);
            }
        }
        for (j, mut pending) in by_receiver.into_iter().enumerate() {
            let to = NodeId::from_index(j);
            let total: u64 = pending.iter().map(|p| p.bits).sum();
            if total > gamma {
                if strict {
                    return Err(EngineError::GlobalReceiveCap { node: to, round, bits: total, cap: gamma });
                }
                pending = self.apply_policy(pending, to, round, 1);
            }
            // Only delivered messages count, on both ends.
            for p in &pending {
                tallies[j].global_recv += p.bits;
                tallies[p.from.index()].global_sent += p.bits;
            }
            pending.sort_by_key(|p| (p.from, p.seq));
            net.global_inbox[j] = pending.into_iter().map(|p| (p.from, p.msg)).collect();
        }

        // Local messages: neighbor check and optional per-edge cap.
        let mut local_in: Vec<Vec<(NodeId, u32, P::Msg)>> = (0..n).map(|_| Vec::new()).collect();
        for i in 0..n {
            let from = NodeId::from_index(i);
            let msgs = std::mem::take(&mut net.outbox[i].local);
            let mut per_edge: HashMap<NodeId, Vec<Pending<P::Msg>>> = HashMap::new();
            for (seq, (to, msg)) in msgs.into_iter().enumerate() {
                if !self.graph.contains(to) {
                    return Err(EngineError::UnknownDestination { to, round });
                }
                if self.graph.edge_between(from, to).is_none() {
                    return Err(EngineError::NotANeighbor { from, to, round });
                }
                let bits = self.message_bits(&msg);
                per_edge.entry(to).or_default().push(Pending { from, seq: seq as u32, to, bits, msg });
            }
            let mut edges: Vec<_> = per_edge.into_iter().collect();
            edges.sort_by_key(|(to, _)| *to);
            for (to, mut pending) in edges {
                if let Some(cap) = self.limits.lambda {
                    let total: u64 = pending.iter().map(|p| p.bits).sum();
                    if total > cap {
                        if strict {
                            return Err(EngineError::LocalEdgeCap { from, to, round, bits: total, cap });
                        }
                        pending = self.apply_policy(pending, from, round, 2 + to.0 as u64);
                    }
                }
                for p in pending {
                    tallies[i].local_sent += p.bits;
                    local_in[to.index()].push((p.from, p.seq, p.msg));
                }
            }
        }
        for (j, mut msgs) in local_in.into_iter().enumerate() {
            msgs.sort_by_key(|(from, seq, _)| (*from, *seq));
            net.local_inbox[j] = msgs.into_iter().map(|(from, _, m)| (from, m)).collect();
        }

        let phase = self.phase.clone();
        self.ledger.push_dense(&phase, &tallies);
        net.rounds += 1;

        for i in 0..n {
            let has_mail = !net.local_inbox[i].is_empty() || !net.global_inbox[i].is_empty();
            if !net.halted[i] || has_mail {
                self.step_node(net, i, net.rounds);
            }
        }
        Ok(())
    }

    fn apply_policy<M>(&mut self, pending: Vec<Pending<M>>, at: NodeId, round: u64, tag: u64) -> Vec<Pending<M>> {
        let cap = match tag {
            0 | 1 => self.limits.gamma,
            _ => self.limits.lambda.unwrap_or(u64::MAX),
        };
        let candidates: Vec<Candidate> =
            pending.iter().map(|p| Candidate { sender: p.from, seq: p.seq, bits: p.bits }).collect();
        let mut rng = derived_rng(self.config.seed, &[stream::ADVERSARY, at.0 as u64, round, tag]);
        let keep = adversary_drop(self.policy.as_ref(), cap, &candidates, &mut rng);
        self.dropped += (pending.len() - keep.len()) as u64;
        let mut keep_mask = vec![false; pending.len()];
        for k in keep {
            keep_mask[k] = true;
        }
        pending.into_iter().zip(keep_mask).filter(|(_, k)| *k).map(|(p, _)| p).collect()
    }

    /// Runs rounds until every program has halted with nothing in flight.
    /// Returns the number of rounds executed by this call.
    pub fn run_until_halt<P: NodeProgram>(&mut self, net: &mut Network<P>, max_rounds: u64) -> Result<u64, EngineError> {
        let mut executed = 0;
        while !net.is_done() {
            if executed >= max_rounds {
                return Err(EngineError::Timeout { max_rounds });
            }
            self.run_round(net)?;
            executed += 1;
        }
        Ok(executed)
    }

    /// `start` + `run_until_halt` with the configured round limit.
    pub fn run<P: NodeProgram>(&mut self, programs: Vec<P>) -> Result<Vec<P>, EngineError> {
        let mut net = self.start(programs);
        let max = self.config.max_rounds;
        self.run_until_halt(&mut net, max)?;
        Ok(net.into_programs())
    }

    /// Commits a batch of hop-by-hop local transmissions (messages forwarded
    /// along fixed paths). Takes as many rounds as the longest path.
    pub fn commit_routes(&mut self, routes: LocalRoutes) -> Result<u64, EngineError> {
        self.commit_batch(routes, &[], 0)
    }

    fn check_route_caps(&self, routes: &LocalRoutes) -> Result<(), EngineError> {
        let base = self.ledger.rounds();
        if let (Some(cap), Some(edge_bits)) = (self.limits.lambda, routes.edge_bits.as_ref()) {
            let mut entries: Vec<_> = edge_bits.iter().collect();
            entries.sort();
            for (&(step, from, to), &bits) in entries {
                if bits > cap {
                    return Err(EngineError::LocalEdgeCap {
                        from: NodeId(from),
                        to: NodeId(to),
                        round: base + step as u64 + 1,
                        bits,
                        cap,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn routes(&self) -> LocalRoutes {
        LocalRoutes {
            n: self.graph.node_count(),
            steps: Vec::new(),
            edge_bits: self.limits.lambda.map(|_| HashMap::new()),
        }
    }

    /// Sends a batch of global messages as fast as the caps allow: each
    /// round, messages are taken in order while both the sender's and the
    /// receiver's remaining budgets fit. Returns the rounds used and, per
    /// packet, the round offset (1-based) in which it was delivered.
    pub fn send_serialized(&mut self, packets: &[GlobalPacket]) -> Result<(u64, Vec<u64>), EngineError> {
        let (rows, delivered_at) = self.schedule_serialized(packets)?;
        let phase = self.phase.clone();
        let rounds = rows.len() as u64;
        for tallies in rows {
            self.ledger.push_dense(&phase, &tallies);
        }
        Ok((rounds, delivered_at))
    }

    fn schedule_serialized(&self, packets: &[GlobalPacket]) -> Result<(Vec<Vec<NodeTally>>, Vec<u64>), EngineError> {
        let gamma = self.limits.gamma;
        let n = self.graph.node_count();
        if let Some(p) = packets.iter().find(|p| p.bits > gamma) {
            return Err(EngineError::MessageTooLarge { bits: p.bits, cap: gamma });
        }
        let mut delivered_at = vec![0u64; packets.len()];
        let mut pending: Vec<usize> = (0..packets.len()).collect();
        let mut rows = Vec::new();
        while !pending.is_empty() {
            let mut tallies = vec![NodeTally::default(); n];
            let mut rest = Vec::with_capacity(pending.len());
            for i in pending {
                let p = &packets[i];
                let (s, r) = (p.from.index(), p.to.index());
                if tallies[s].global_sent + p.bits <= gamma && tallies[r].global_recv + p.bits <= gamma {
                    tallies[s].global_sent += p.bits;
                    tallies[r].global_recv += p.bits;
                    delivered_at[i] = rows.len() as u64 + 1;
                } else {
                    rest.push(i);
                }
            }
            rows.push(tallies);
            pending = rest;
        }
        Ok((rows, delivered_at))
    }

    /// Runs local routes and serialized global packets side by side, for at
    /// least `min_rounds` rounds (idle rounds model a fixed-length lockstep
    /// slot). Returns the rounds used.
    pub fn commit_batch(
        &mut self,
        routes: LocalRoutes,
        packets: &[GlobalPacket],
        min_rounds: u64,
    ) -> Result<u64, EngineError> {
        let (global_rows, _) = self.schedule_serialized(packets)?;
        self.check_route_caps(&routes)?;
        let n = self.graph.node_count();
        let rounds = (routes.steps.len().max(global_rows.len()) as u64).max(min_rounds);
        let phase = self.phase.clone();
        for r in 0..rounds as usize {
            let mut tallies = global_rows.get(r).cloned().unwrap_or_else(|| vec![NodeTally::default(); n]);
            if let Some(step) = routes.steps.get(r) {
                for (t, &b) in tallies.iter_mut().zip(step) {
                    t.local_sent += b;
                }
            }
            self.ledger.push_dense(&phase, &tallies);
        }
        Ok(rounds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlobalPacket {
    pub from: NodeId,
    pub to: NodeId,
    pub bits: u64,
}

/// Accumulates per-round local traffic for messages forwarded along paths.
pub struct LocalRoutes {
    n: usize,
    steps: Vec<Vec<u64>>,
    edge_bits: Option<HashMap<(u32, u32, u32), u64>>,
}

impl LocalRoutes {
    /// Records that `from` forwards `bits` to its neighbor `to` in the
    /// `step`-th round (0-based) of this batch.
    pub fn add_hop(&mut self, step: usize, from: NodeId, to: NodeId, bits: u64) {
        while self.steps.len() <= step {
            self.steps.push(vec![0; self.n]);
        }
        self.steps[step][from.index()] += bits;
        if let Some(map) = self.edge_bits.as_mut() {
            *map.entry((step as u32, from.0, to.0)).or_default() += bits;
        }
    }

    /// Rounds this batch will take.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
mod tests;
