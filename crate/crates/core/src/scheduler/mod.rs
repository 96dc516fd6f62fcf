//! Running many skeleton algorithms side by side: each skeleton node hands
//! its per-algorithm work to helpers, skeleton-edge messages travel
//! between paired helpers over the local network, and global messages are
//! serialized through the helpers' global budgets.

mod assign;
mod run;

use std::fmt::Debug;

pub use assign::{assign_algorithms, pair_helpers, HelperAssignment};
pub use run::{distribute_inputs, run_scheduled, HelperView, Router, ScheduledRun};

use crate::engine::Payload;
use crate::error::ScheduleError;
use crate::graph::NodeId;
use crate::skeleton::SkeletonGraph;

/// A program run at every skeleton node, talking only to skeleton
/// neighbors (local) or to arbitrary skeleton nodes (global).
pub trait SkeletonAlgorithm {
    type State: Clone + PartialEq + Debug;
    type Msg: Clone + Payload;

    fn init(&self, node: NodeId, skeleton: &SkeletonGraph) -> Self::State;

    /// Called at round 0 for every node, then whenever the node is awake
    /// or has mail.
    fn step(&self, state: &mut Self::State, ctx: &mut SkeletonCtx<'_, Self::Msg>);

    /// Rounds the algorithm may use on this skeleton.
    fn round_bound(&self, skeleton: &SkeletonGraph) -> u64;

    /// Size of the per-node input a helper must receive.
    fn input_bits(&self, _node: NodeId) -> u64 {
        0
    }

    /// Size of the result shipped back to the skeleton node.
    fn output_bits(&self, state: &Self::State) -> u64;
}

/// What one skeleton node sees in one simulated round.
pub struct SkeletonCtx<'a, M> {
    node: NodeId,
    round: u64,
    skeleton: &'a SkeletonGraph,
    local_inbox: &'a [(NodeId, M)],
    global_inbox: &'a [(NodeId, M)],
    local_out: Vec<(NodeId, M)>,
    global_out: Vec<(NodeId, M)>,
    halt: bool,
}

impl<'a, M> SkeletonCtx<'a, M> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn skeleton(&self) -> &'a SkeletonGraph {
        self.skeleton
    }

    pub fn local_inbox(&self) -> &[(NodeId, M)] {
        self.local_inbox
    }

    pub fn global_inbox(&self) -> &[(NodeId, M)] {
        self.global_inbox
    }

    /// Message along a skeleton edge.
    pub fn send_local(&mut self, to: NodeId, msg: M) {
        self.local_out.push((to, msg));
    }

    /// Message to any skeleton node.
    pub fn send_global(&mut self, to: NodeId, msg: M) {
        self.global_out.push((to, msg));
    }

    pub fn halt(&mut self) {
        self.halt = true;
    }
}

/// A message produced in one simulated round, before delivery.
pub(crate) struct Sent<M> {
    pub from: NodeId,
    pub to: NodeId,
    pub global: bool,
    pub msg: M,
}

/// Pregel-style execution state of one algorithm on the skeleton, shared
/// by the standalone and the scheduled runner.
pub(crate) struct Execution<'a, A: SkeletonAlgorithm> {
    pub id: usize,
    alg: &'a A,
    skeleton: &'a SkeletonGraph,
    pub states: Vec<A::State>,
    halted: Vec<bool>,
    local_in: Vec<Vec<(NodeId, A::Msg)>>,
    global_in: Vec<Vec<(NodeId, A::Msg)>>,
    pending: bool,
    pub rounds: u64,
    bound: u64,
}

impl<'a, A: SkeletonAlgorithm> Execution<'a, A> {
    pub fn new(id: usize, alg: &'a A, skeleton: &'a SkeletonGraph) -> Self {
        let m = skeleton.len();
        Execution {
            id,
            alg,
            skeleton,
            states: skeleton.nodes().iter().map(|&u| alg.init(u, skeleton)).collect(),
            halted: vec![false; m],
            local_in: vec![Vec::new(); m],
            global_in: vec![Vec::new(); m],
            pending: false,
            rounds: 0,
            bound: alg.round_bound(skeleton),
        }
    }

    pub fn is_done(&self) -> bool {
        self.rounds > 0 && !self.pending && self.halted.iter().all(|&h| h)
    }

    /// Steps every awake node once and returns what they sent.
    pub fn step(&mut self) -> Result<Vec<Sent<A::Msg>>, ScheduleError> {
        if self.rounds >= self.bound.max(1) {
            return Err(ScheduleError::RoundBoundExceeded { algorithm: self.id, bound: self.bound });
        }
        let round = self.rounds;
        let mut sent = Vec::new();
        let local_in = std::mem::replace(&mut self.local_in, vec![Vec::new(); self.skeleton.len()]);
        let global_in = std::mem::replace(&mut self.global_in, vec![Vec::new(); self.skeleton.len()]);
        for (i, &u) in self.skeleton.nodes().iter().enumerate() {
            if round > 0 && self.halted[i] && local_in[i].is_empty() && global_in[i].is_empty() {
                continue;
            }
            let mut ctx = SkeletonCtx {
                node: u,
                round,
                skeleton: self.skeleton,
                local_inbox: &local_in[i],
                global_inbox: &global_in[i],
                local_out: Vec::new(),
                global_out: Vec::new(),
                halt: false,
            };
            self.alg.step(&mut self.states[i], &mut ctx);
            self.halted[i] = ctx.halt;
            for (to, msg) in ctx.local_out {
                if self.skeleton.weight(u, to).is_none() {
                    return Err(ScheduleError::NotASkeletonNeighbor { algorithm: self.id, node: u, to });
                }
                sent.push(Sent { from: u, to, global: false, msg });
            }
            for (to, msg) in ctx.global_out {
                if !self.skeleton.contains(to) {
                    return Err(ScheduleError::NotASkeletonNode { algorithm: self.id, node: u, to });
                }
                sent.push(Sent { from: u, to, global: true, msg });
            }
        }
        self.rounds += 1;
        Ok(sent)
    }

    pub fn deliver(&mut self, sent: Vec<Sent<A::Msg>>) {
        self.pending = !sent.is_empty();
        for s in sent {
            let i = self.skeleton.index_of(s.to).expect("validated destination");
            let inbox = if s.global { &mut self.global_in[i] } else { &mut self.local_in[i] };
            inbox.push((s.from, s.msg));
        }
        for inbox in self.local_in.iter_mut().chain(self.global_in.iter_mut()) {
            inbox.sort_by_key(|&(from, _)| from);
        }
    }
}

/// Result of running one algorithm directly on the skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct StandaloneRun<S> {
    /// Final states indexed like [`SkeletonGraph::nodes`].
    pub states: Vec<S>,
    pub rounds: u64,
}

/// Runs `alg` on the skeleton with no network costs attached: the
/// reference the scheduled execution must reproduce.
pub fn run_standalone<A: SkeletonAlgorithm>(
    skeleton: &SkeletonGraph,
    alg: &A,
) -> Result<StandaloneRun<A::State>, ScheduleError> {
    let mut exec = Execution::new(0, alg, skeleton);
    while !exec.is_done() {
        let sent = exec.step()?;
        exec.deliver(sent);
    }
    Ok(StandaloneRun { rounds: exec.rounds, states: exec.states })
}
