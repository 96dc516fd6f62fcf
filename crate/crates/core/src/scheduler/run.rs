use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use super::{Execution, HelperAssignment, SkeletonAlgorithm};
use crate::engine::{Engine, GlobalPacket, LocalRoutes, Payload};
use crate::error::ScheduleError;
use crate::graph::{bit_length, hop_distances_from, NodeId, WeightedGraph};
use crate::skeleton::SkeletonGraph;

/// Static shortest-hop paths between node pairs, computed on first use.
pub struct Router<'g> {
    graph: &'g WeightedGraph,
    towards: HashMap<NodeId, Vec<u32>>,
}

impl<'g> Router<'g> {
    pub fn new(graph: &'g WeightedGraph) -> Self {
        Router { graph, towards: HashMap::new() }
    }

    fn table(&mut self, to: NodeId) -> &Vec<u32> {
        let g = self.graph;
        self.towards.entry(to).or_insert_with(|| hop_distances_from(g, to))
    }

    pub fn hops(&mut self, from: NodeId, to: NodeId) -> u32 {
        self.table(to)[from.index()]
    }

    /// Forwards `bits` hop by hop from `from` to `to`, always moving to the
    /// smallest-id neighbor one hop closer. Returns the path length.
    pub fn route(&mut self, routes: &mut LocalRoutes, from: NodeId, to: NodeId, bits: u64) -> u32 {
        let g = self.graph;
        let table = self.table(to);
        let mut cur = from;
        let mut step = 0;
        while cur != to {
            let next = g
                .neighbors(cur)
                .iter()
                .map(|a| a.node)
                .filter(|v| table[v.index()] + 1 == table[cur.index()])
                .min()
                .expect("connected graph");
            routes.add_hop(step, cur, next, bits);
            cur = next;
            step += 1;
        }
        step as u32
    }
}

/// What a helper holds after input distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperView {
    pub skeleton_node: NodeId,
    pub helper: NodeId,
    /// Incident skeleton edges of `skeleton_node`.
    pub edges: Vec<(NodeId, u64)>,
    pub algorithms: Range<usize>,
}

/// Ships every skeleton node's incident edges and per-algorithm inputs to
/// the helpers that will simulate it (phase "sched.distribute").
pub fn distribute_inputs<A: SkeletonAlgorithm>(
    engine: &mut Engine<'_>,
    router: &mut Router<'_>,
    skeleton: &SkeletonGraph,
    assignment: &HelperAssignment,
    algorithms: &[A],
) -> Result<Vec<HelperView>, ScheduleError> {
    let id_bits = engine.graph().id_bits() as u64;
    let mut routes = engine.routes();
    let mut views = Vec::new();
    for &u in skeleton.nodes() {
        let edges = skeleton.neighbors(u).to_vec();
        let edge_bits: u64 = edges.iter().map(|&(_, w)| id_bits + bit_length(w) as u64).sum();
        for j in 0..assignment.helpers_in_use() {
            let helper = assignment.helpers[&u][j];
            let algs = assignment.algorithms_of(j);
            let bits = edge_bits + algs.clone().map(|a| algorithms[a].input_bits(u)).sum::<u64>();
            router.route(&mut routes, u, helper, bits);
            views.push(HelperView { skeleton_node: u, helper, edges: edges.clone(), algorithms: algs });
        }
    }
    let outer = engine.set_phase("sched.distribute");
    let result = engine.commit_routes(routes);
    engine.set_phase(&outer);
    result?;
    Ok(views)
}

/// Outcome of a scheduled execution.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledRun<S> {
    /// `states[a][i]`: final state of algorithm `a` at skeleton node `i`.
    pub states: Vec<Vec<S>>,
    pub simulated_rounds: u64,
    /// Local leg length of one simulated round: the largest hop distance
    /// between paired helpers.
    pub slot_rounds: u64,
    /// Engine rounds spent in each simulated round.
    pub round_costs: Vec<u64>,
    pub views: Vec<HelperView>,
}

/// Runs all algorithms through their helpers in lockstep: distribution,
/// then one slot of at least `slot_rounds` engine rounds per simulated
/// round ("sched.simulate"), then outputs back to the skeleton nodes
/// ("sched.return").
pub fn run_scheduled<A: SkeletonAlgorithm>(
    engine: &mut Engine<'_>,
    skeleton: &SkeletonGraph,
    assignment: &HelperAssignment,
    algorithms: &[A],
) -> Result<ScheduledRun<A::State>, ScheduleError> {
    let g = engine.graph();
    let mut router = Router::new(g);
    let views = distribute_inputs(engine, &mut router, skeleton, assignment, algorithms)?;

    let mut slot = 1u64;
    for &(u, v, _) in skeleton.edges() {
        for j in 0..assignment.helpers_in_use() {
            let (a, b) = (assignment.helpers[&u][j], assignment.helpers[&v][j]);
            slot = slot.max(router.hops(a, b) as u64);
        }
    }

    let limits = engine.limits();
    let tag_bits = bit_length(algorithms.len() as u64) as u64;
    let mut execs: Vec<Execution<'_, A>> =
        algorithms.iter().enumerate().map(|(i, alg)| Execution::new(i, alg, skeleton)).collect();
    let mut round_costs = Vec::new();
    let outer = engine.set_phase("sched.simulate");
    while execs.iter().any(|e| !e.is_done()) {
        let mut local: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        // (round-robin rank, slot, sender helper) -> packet
        let mut global: Vec<((usize, usize, NodeId), GlobalPacket)> = Vec::new();
        let mut sent_count: HashMap<(NodeId, usize), usize> = HashMap::new();
        let mut outboxes = Vec::with_capacity(execs.len());
        for (a, exec) in execs.iter_mut().enumerate() {
            if exec.is_done() {
                outboxes.push(Vec::new());
                continue;
            }
            let sent = match exec.step() {
                Ok(s) => s,
                Err(e) => {
                    engine.set_phase(&outer);
                    return Err(e);
                }
            };
            for s in &sent {
                let from = assignment.helper_for(s.from, a).expect("assigned");
                let to = assignment.helper_for(s.to, a).expect("assigned");
                let bits = tag_bits + s.msg.payload_bits();
                if !s.global {
                    if from != to {
                        *local.entry((from, to)).or_default() += bits;
                    }
                } else if from != to {
                    let slot_of = a % assignment.ell;
                    let rank = sent_count.entry((from, slot_of)).or_default();
                    global.push(((*rank, slot_of, from), GlobalPacket { from, to, bits: limits.header_bits + bits }));
                    *rank += 1;
                }
            }
            outboxes.push(sent);
        }
        let mut routes = engine.routes();
        for (&(from, to), &bits) in &local {
            router.route(&mut routes, from, to, bits);
        }
        global.sort_by_key(|&(key, _)| key);
        let packets: Vec<GlobalPacket> = global.into_iter().map(|(_, p)| p).collect();
        match engine.commit_batch(routes, &packets, slot) {
            Ok(cost) => round_costs.push(cost),
            Err(e) => {
                engine.set_phase(&outer);
                return Err(e.into());
            }
        }
        for (exec, sent) in execs.iter_mut().zip(outboxes) {
            exec.deliver(sent);
        }
    }

    engine.set_phase("sched.return");
    let mut back: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
    for (a, exec) in execs.iter().enumerate() {
        for (i, &u) in skeleton.nodes().iter().enumerate() {
            let helper = assignment.helper_for(u, a).expect("assigned");
            if helper != u {
                *back.entry((helper, u)).or_default() += algorithms[a].output_bits(&exec.states[i]);
            }
        }
    }
    let mut routes = engine.routes();
    for (&(from, to), &bits) in &back {
        router.route(&mut routes, from, to, bits);
    }
    let result = engine.commit_routes(routes);
    engine.set_phase(&outer);
    result?;

    let simulated_rounds = execs.iter().map(|e| e.rounds).max().unwrap_or(0);
    Ok(ScheduledRun {
        states: execs.into_iter().map(|e| e.states).collect(),
        simulated_rounds,
        slot_rounds: slot,
        round_costs,
        views,
    })
}
