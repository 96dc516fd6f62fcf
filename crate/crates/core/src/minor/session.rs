use super::{build_overlay_tree, contract, AggregationOperator, ContractionChoice, MinorNetwork, OverlayTree};
use crate::engine::{Context, Engine, NodeProgram, NodeTally, Payload};
use crate::error::MinorError;
use crate::graph::{log2_ceil, Dist, Edge, NodeId, WeightedGraph};

/// Overlay construction is charged `C_OVERLAY * ceil(log n)` rounds.
pub const C_OVERLAY: u64 = 2;
/// Values may use at most `C_VAL * ceil(log n)` bits.
pub const C_VAL: u32 = 4;

/// One logical Minor-Aggregation computation. Several instances can share a
/// round (and its contraction) and run side by side.
pub struct MaInstance<'a> {
    /// `x_v`, indexed by node slot.
    pub inputs: Vec<Dist>,
    pub consensus: AggregationOperator,
    pub aggregation: AggregationOperator,
    /// `(edge, y of edge.u's supernode, y of edge.v's supernode)` to
    /// `(z for edge.u's side, z for edge.v's side)`.
    pub edge_value: Box<dyn Fn(&Edge, Dist, Dist) -> (Dist, Dist) + 'a>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaOutput {
    pub consensus: Vec<Dist>,
    pub aggregate: Vec<Dist>,
}

/// Sequential evaluation of contraction, consensus and aggregation.
pub fn evaluate_sequential(
    g: &WeightedGraph,
    choices: &ContractionChoice,
    instance: &MaInstance<'_>,
) -> Result<MaOutput, MinorError> {
    let minor = contract(g, choices);
    let y = super::consensus(&minor, &instance.inputs, instance.consensus)?;
    let z: Vec<Option<(Dist, Dist)>> = minor
        .cross_edges()
        .iter()
        .map(|ce| {
            let e = g.edge(ce.edge);
            Some((instance.edge_value)(e, y[e.u.index()], y[e.v.index()]))
        })
        .collect();
    let aggregate = super::aggregate(&minor, g, &z, instance.aggregation)?;
    Ok(MaOutput { consensus: y, aggregate })
}

/// Runs rounds on an engine, reusing overlay trees while the contraction
/// stays the same.
#[derive(Default)]
pub struct MaSession {
    cache: Option<(ContractionChoice, MinorNetwork, Vec<Option<OverlayTree>>)>,
}

impl MaSession {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn round(
        &mut self,
        engine: &mut Engine<'_>,
        choices: &ContractionChoice,
        instances: &[MaInstance<'_>],
    ) -> Result<Vec<MaOutput>, MinorError> {
        let g = engine.graph();
        let n = g.node_count();
        let cap = C_VAL * log2_ceil(n);
        for inst in instances {
            if inst.inputs.len() != n {
                return Err(MinorError::LengthMismatch { expected: n, got: inst.inputs.len() });
            }
            for &x in &inst.inputs {
                inst.consensus.check(x)?;
                check_width(x, cap)?;
            }
        }

        let outer = engine.set_phase("ma.contract");
        let result = self.contract_step(engine, choices).and_then(|_| {
            let (_, minor, trees) = self.cache.as_ref().expect("contracted");
            engine.set_phase("ma.consensus");
            let inputs: Vec<(AggregationOperator, Vec<Dist>)> =
                instances.iter().map(|i| (i.consensus, i.inputs.clone())).collect();
            let y = tree_fold(engine, minor, trees, &inputs)?;
            engine.set_phase("ma.aggregate");
            let partial = exchange_and_fold(engine, minor, instances, &y, cap)?;
            let agg_inputs: Vec<(AggregationOperator, Vec<Dist>)> =
                instances.iter().map(|i| i.aggregation).zip(partial).collect();
            let aggregate = tree_fold(engine, minor, trees, &agg_inputs)?;
            Ok(y.into_iter().zip(aggregate).map(|(consensus, aggregate)| MaOutput { consensus, aggregate }).collect())
        });
        engine.set_phase(&outer);
        result
    }

    fn contract_step(&mut self, engine: &mut Engine<'_>, choices: &ContractionChoice) -> Result<(), MinorError> {
        if matches!(&self.cache, Some((c, _, _)) if c == choices) {
            return Ok(());
        }
        let g = engine.graph();
        let minor = contract(g, choices);
        let mut contracted: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); minor.supernodes().len()];
        for (i, e) in g.edges().iter().enumerate() {
            if choices.is_contracted(i) {
                contracted[minor.supernode_of(e.u)].push((e.u, e.v));
            }
        }
        let mut trees = Vec::with_capacity(minor.supernodes().len());
        for (members, edges) in minor.supernodes().iter().zip(&contracted) {
            trees.push(if members.len() > 1 { Some(build_overlay_tree(members, edges)?) } else { None });
        }
        if trees.iter().any(Option::is_some) {
            charge_overlay_construction(engine, &trees);
        }
        self.cache = Some((choices.clone(), minor, trees));
        Ok(())
    }
}

/// One-shot round with a single instance.
pub fn ma_round(
    engine: &mut Engine<'_>,
    choices: &ContractionChoice,
    instance: MaInstance<'_>,
) -> Result<MaOutput, MinorError> {
    let mut out = MaSession::new().round(engine, choices, std::slice::from_ref(&instance))?;
    Ok(out.pop().expect("one instance"))
}

fn check_width(x: Dist, cap: u32) -> Result<(), MinorError> {
    if x.bits() > cap {
        return Err(MinorError::ValueTooWide { value: x.to_string(), bits: x.bits(), cap });
    }
    Ok(())
}

/// Charges the tree construction: every non-root member introduces itself
/// to its parent with a header-only message (left children in the first
/// round, right children in the second), then the remaining rounds idle.
fn charge_overlay_construction(engine: &mut Engine<'_>, trees: &[Option<OverlayTree>]) {
    let n = engine.graph().node_count();
    let header = engine.limits().header_bits;
    let total = C_OVERLAY * log2_ceil(n) as u64;
    let phase = engine.phase().to_string();
    for slot in 0..2 {
        let mut dense = vec![NodeTally::default(); n];
        for tree in trees.iter().flatten() {
            for &v in tree.members() {
                if let Some(p) = tree.parent(v) {
                    if tree.child_slot(v) == slot {
                        dense[v.index()].global_sent += header;
                        dense[p.index()].global_recv += header;
                    }
                }
            }
        }
        let tallies = dense.into_iter().enumerate().filter(|(_, t)| !t.is_zero()).map(|(i, t)| (NodeId::from_index(i), t)).collect();
        engine.ledger_mut().push_sparse(&phase, tallies);
    }
    engine.ledger_mut().charge(&phase, total.saturating_sub(2));
}

#[derive(Clone, Copy, Debug)]
struct FoldMsg {
    inst: u32,
    tag_bits: u32,
    value: Dist,
}

impl Payload for FoldMsg {
    fn payload_bits(&self) -> u64 {
        (self.tag_bits + self.value.bits()) as u64
    }
}

#[derive(Clone, Debug)]
struct FoldState {
    op: AggregationOperator,
    acc: Dist,
    waiting: usize,
    sent_up: bool,
    result: Option<Dist>,
    sent_down: [bool; 2],
}

/// Converge-cast then broadcast on an overlay tree. A child in slot `s`
/// talks to its parent only in rounds of parity `s`, so every node receives
/// at most one message per instance per round.
struct FoldNode {
    parent: Option<(NodeId, usize)>,
    children: Vec<NodeId>,
    tag_bits: u32,
    states: Vec<FoldState>,
}

impl NodeProgram for FoldNode {
    type Msg = FoldMsg;

    fn step(&mut self, ctx: &mut Context<'_, FoldMsg>) {
        let parent = self.parent.map(|(p, _)| p);
        for &(from, m) in ctx.global_inbox() {
            let st = &mut self.states[m.inst as usize];
            if Some(from) == parent {
                st.result = Some(m.value);
            } else {
                st.acc = st.op.combine(st.acc, m.value);
                st.waiting -= 1;
            }
        }
        let parity = ((ctx.round() + 1) % 2) as usize;
        let mut done = true;
        for (i, st) in self.states.iter_mut().enumerate() {
            if st.waiting == 0 && !st.sent_up {
                match self.parent {
                    None => {
                        st.result = Some(st.acc);
                        st.sent_up = true;
                    }
                    Some((p, slot)) if slot == parity => {
                        ctx.send_global(p, FoldMsg { inst: i as u32, tag_bits: self.tag_bits, value: st.acc });
                        st.sent_up = true;
                    }
                    Some(_) => {}
                }
            }
            if let Some(r) = st.result {
                for (c, &child) in self.children.iter().enumerate() {
                    if !st.sent_down[c] && c == parity {
                        ctx.send_global(child, FoldMsg { inst: i as u32, tag_bits: self.tag_bits, value: r });
                        st.sent_down[c] = true;
                    }
                }
            }
            done &= st.result.is_some() && st.sent_down[..self.children.len()].iter().all(|&s| s);
        }
        if done {
            ctx.halt();
        }
    }
}

/// Folds `inputs` of every instance over each supernode; returns, per
/// instance, the per-node result.
fn tree_fold(
    engine: &mut Engine<'_>,
    minor: &MinorNetwork,
    trees: &[Option<OverlayTree>],
    inputs: &[(AggregationOperator, Vec<Dist>)],
) -> Result<Vec<Vec<Dist>>, MinorError> {
    let n = engine.graph().node_count();
    let tag_bits = if inputs.len() > 1 { log2_ceil(inputs.len()) } else { 0 };
    let programs: Vec<FoldNode> = (0..n)
        .map(|i| {
            let v = NodeId::from_index(i);
            let tree = trees[minor.supernode_of(v)].as_ref();
            let parent = tree.and_then(|t| t.parent(v).map(|p| (p, t.child_slot(v))));
            let children = tree.map(|t| t.children(v)).unwrap_or_default();
            let states = inputs
                .iter()
                .map(|(op, xs)| FoldState {
                    op: *op,
                    acc: xs[i],
                    waiting: children.len(),
                    sent_up: false,
                    result: None,
                    sent_down: [false; 2],
                })
                .collect();
            FoldNode { parent, children, tag_bits, states }
        })
        .collect();
    let done = engine.run(programs)?;
    Ok((0..inputs.len())
        .map(|k| done.iter().map(|p| p.states[k].result.expect("fold finished")).collect())
        .collect())
}

#[derive(Clone, Debug)]
struct YMsg(Vec<Dist>);

impl Payload for YMsg {
    fn payload_bits(&self) -> u64 {
        self.0.iter().map(|d| d.bits() as u64).sum()
    }
}

/// Sends this node's consensus values across each incident cross edge.
struct Exchange {
    y: Vec<Dist>,
    cross: Vec<NodeId>,
    received: Vec<(NodeId, Vec<Dist>)>,
}

impl NodeProgram for Exchange {
    type Msg = YMsg;

    fn step(&mut self, ctx: &mut Context<'_, YMsg>) {
        if ctx.round() == 0 {
            for &u in &self.cross {
                ctx.send_local(u, YMsg(self.y.clone()));
            }
        }
        self.received.extend(ctx.local_inbox().iter().map(|(f, m)| (*f, m.0.clone())));
        ctx.halt();
    }
}

/// One local round in which cross-edge endpoints swap consensus values;
/// each endpoint then evaluates the edge on its own side and folds.
fn exchange_and_fold(
    engine: &mut Engine<'_>,
    minor: &MinorNetwork,
    instances: &[MaInstance<'_>],
    y: &[Vec<Dist>],
    cap: u32,
) -> Result<Vec<Vec<Dist>>, MinorError> {
    let g = engine.graph();
    let n = g.node_count();
    let mut cross: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for ce in minor.cross_edges() {
        let e = g.edge(ce.edge);
        cross[e.u.index()].push(e.v);
        cross[e.v.index()].push(e.u);
    }
    let programs: Vec<Exchange> = (0..n)
        .map(|i| Exchange { y: y.iter().map(|ys| ys[i]).collect(), cross: std::mem::take(&mut cross[i]), received: Vec::new() })
        .collect();
    let done = engine.run(programs)?;

    let mut partial: Vec<Vec<Dist>> = instances.iter().map(|inst| vec![inst.aggregation.identity(); n]).collect();
    for (i, prog) in done.iter().enumerate() {
        let v = NodeId::from_index(i);
        for (u, theirs) in &prog.received {
            let e = g.edge(g.edge_between(v, *u).expect("cross edge"));
            for (k, inst) in instances.iter().enumerate() {
                let (yu, yv) = if e.u == v { (prog.y[k], theirs[k]) } else { (theirs[k], prog.y[k]) };
                let (zu, zv) = (inst.edge_value)(e, yu, yv);
                let mine = if e.u == v { zu } else { zv };
                inst.aggregation.check(mine)?;
                check_width(mine, cap)?;
                partial[k][i] = inst.aggregation.combine(partial[k][i], mine);
            }
        }
    }
    Ok(partial)
}
