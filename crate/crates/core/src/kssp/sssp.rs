use serde::Serialize;

use crate::engine::{Engine, Payload};
use crate::error::MinorError;
use crate::graph::{bit_length, Dist, NodeId};
use crate::minor::{AggregationOperator, ContractionChoice, MaInstance, MaSession};
use crate::scheduler::{SkeletonAlgorithm, SkeletonCtx};
use crate::skeleton::SkeletonGraph;

/// Resolution of ε in the rounding engine.
const EPS_DENOM: u128 = 1_000_000;

/// Single-source shortest paths on the skeleton, pluggable into the
/// pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum SsspEngine {
    /// Bellman-Ford on exact weights.
    Exact,
    /// Bellman-Ford on weights rounded up per distance scale.
    Rounding { eps: f64 },
}

impl SsspEngine {
    pub fn name(&self) -> &'static str {
        match self {
            SsspEngine::Exact => "exact",
            SsspEngine::Rounding { .. } => "rounding",
        }
    }

    /// The engine's ε (0 for the exact engine).
    pub fn eps(&self) -> f64 {
        match *self {
            SsspEngine::Exact => 0.0,
            SsspEngine::Rounding { eps } => eps,
        }
    }

    pub fn stretch(&self) -> f64 {
        1.0 + self.eps()
    }

    pub fn algorithm(&self, source: NodeId, skeleton: &SkeletonGraph) -> SkeletonSssp {
        let scales = match *self {
            SsspEngine::Exact => vec![Scale { num: 1, den: 1 }],
            SsspEngine::Rounding { eps } => {
                let eps_num = ((eps * EPS_DENOM as f64).floor() as u128).max(1);
                let hops = skeleton.len().max(1) as u128;
                let max_w = skeleton.edges().iter().map(|e| e.2).max().unwrap_or(1) as u128;
                let top = hops * max_w;
                let mut scales = Vec::new();
                let mut d = 1u128;
                loop {
                    // ρ = ε * d / (2 * hops)
                    scales.push(Scale { num: eps_num * d, den: 2 * hops * EPS_DENOM });
                    if d >= top {
                        break;
                    }
                    d *= 2;
                }
                scales
            }
        };
        SkeletonSssp { source, scales }
    }
}

/// Weights are measured in units of `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Scale {
    num: u128,
    den: u128,
}

impl Scale {
    fn units(&self, w: u64) -> u128 {
        (w as u128 * self.den).div_ceil(self.num)
    }

    fn length(&self, units: u128) -> u64 {
        (units * self.num / self.den) as u64
    }
}

/// Bellman-Ford from one source. Every round is a Minor-Aggregation round
/// on the skeleton with nothing contracted: each node's consensus value is
/// its own label, and it aggregates the minimum of neighbor label plus
/// edge weight over its incident edges.
#[derive(Clone, Debug)]
pub struct SkeletonSssp {
    source: NodeId,
    scales: Vec<Scale>,
}

/// Per-scale labels in weight units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsspState {
    labels: Vec<Option<u128>>,
    dist: Dist,
}

impl SsspState {
    /// Distance estimate, never below the true skeleton distance.
    pub fn dist(&self) -> Dist {
        self.dist
    }
}

#[derive(Clone, Debug)]
pub struct LabelUpdate(Vec<(u32, u128)>);

impl Payload for LabelUpdate {
    fn payload_bits(&self) -> u64 {
        let tag = if self.0.len() > 1 { 8 } else { 0 };
        self.0.iter().map(|&(_, u)| tag + (128 - u.leading_zeros()).max(1) as u64).sum()
    }
}

impl SkeletonAlgorithm for SkeletonSssp {
    type State = SsspState;
    type Msg = LabelUpdate;

    fn init(&self, _node: NodeId, _skeleton: &SkeletonGraph) -> SsspState {
        SsspState { labels: vec![None; self.scales.len()], dist: Dist::Infinite }
    }

    fn step(&self, state: &mut SsspState, ctx: &mut SkeletonCtx<'_, LabelUpdate>) {
        let me = ctx.node();
        let mut changed = Vec::new();
        if ctx.round() == 0 && me == self.source {
            for (i, l) in state.labels.iter_mut().enumerate() {
                *l = Some(0);
                changed.push((i as u32, 0));
            }
        }
        for (from, update) in ctx.local_inbox() {
            let w = ctx.skeleton().weight(me, *from).expect("skeleton neighbor");
            for &(i, units) in &update.0 {
                let scale = self.scales[i as usize];
                let cand = units + scale.units(w);
                let label = &mut state.labels[i as usize];
                if label.is_none_or(|l| cand < l) {
                    *label = Some(cand);
                    changed.retain(|&(j, _)| j != i);
                    changed.push((i, cand));
                }
            }
        }
        if !changed.is_empty() {
            state.dist = self
                .scales
                .iter()
                .zip(&state.labels)
                .filter_map(|(s, l)| l.map(|u| s.length(u)))
                .min()
                .map_or(Dist::Infinite, Dist::Finite);
            changed.sort_unstable();
            for &(v, _) in ctx.skeleton().neighbors(me) {
                ctx.send_local(v, LabelUpdate(changed.clone()));
            }
        }
        ctx.halt();
    }

    fn round_bound(&self, skeleton: &SkeletonGraph) -> u64 {
        skeleton.len() as u64 + 2
    }

    fn input_bits(&self, _node: NodeId) -> u64 {
        bit_length(self.source.0 as u64) as u64
    }

    fn output_bits(&self, state: &SsspState) -> u64 {
        state.dist.bits() as u64
    }
}

/// Exact multi-source Bellman-Ford on the whole network, run as
/// Minor-Aggregation rounds: one aggregation round per relaxation step, and
/// an Or-consensus over the fully contracted graph to detect that no label
/// changed.
pub fn ma_bellman_ford(engine: &mut Engine<'_>, sources: &[NodeId]) -> Result<Vec<Vec<Dist>>, MinorError> {
    let g = engine.graph();
    let n = g.node_count();
    let mut labels: Vec<Vec<Dist>> = sources
        .iter()
        .map(|s| (0..n).map(|i| if i == s.index() { Dist::ZERO } else { Dist::Infinite }).collect())
        .collect();
    let none = ContractionChoice::none(g);
    let all = ContractionChoice::all(g);
    let mut relax = MaSession::new();
    let mut detect = MaSession::new();
    loop {
        let instances: Vec<MaInstance<'_>> = labels
            .iter()
            .map(|l| MaInstance {
                inputs: l.clone(),
                consensus: AggregationOperator::Min,
                aggregation: AggregationOperator::Min,
                edge_value: Box::new(|e, yu, yv| (yv + e.weight, yu + e.weight)),
            })
            .collect();
        let out = relax.round(engine, &none, &instances)?;
        let mut changed = vec![Dist::ZERO; n];
        for (l, o) in labels.iter_mut().zip(out) {
            for (i, a) in o.aggregate.into_iter().enumerate() {
                if a < l[i] {
                    l[i] = a;
                    changed[i] = Dist::Finite(1);
                }
            }
        }
        let flag = MaInstance {
            inputs: changed,
            consensus: AggregationOperator::Or,
            aggregation: AggregationOperator::Or,
            edge_value: Box::new(|_, _, _| (Dist::ZERO, Dist::ZERO)),
        };
        let any = detect.round(engine, &all, &[flag])?;
        if any[0].consensus[0] == Dist::ZERO {
            return Ok(labels);
        }
    }
}
