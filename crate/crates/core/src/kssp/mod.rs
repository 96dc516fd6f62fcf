//! k-source shortest paths: skeleton sources, random sources, arbitrary
//! sources via proxies, and the few-sources case.

mod sssp;
mod table;
mod tokens;

use std::collections::BTreeMap;

use log::info;
use rand::seq::SliceRandom;
use serde::Serialize;

pub use sssp::{ma_bellman_ford, SkeletonSssp, SsspEngine, SsspState};
pub use table::{check_table, DistanceTable, Stretch, TableCheck};
pub use tokens::{token_budget, token_dissemination, token_message_bits, DisseminationReport, Token, C_TOK};

use crate::engine::{Context, Engine, NodeProgram, Payload};
use crate::error::KsspError;
use crate::graph::{bit_length, Dist, NodeId};
use crate::rng::{derived_rng, stream};
use crate::scheduler::{assign_algorithms, run_scheduled};
use crate::skeleton::{build_skeleton, compute_helper_sets, hop_radius, sample_skeleton, HelperFamily, SkeletonGraph, C_H};

/// Knobs shared by the pipelines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub engine: SsspEngine,
    /// Constant in the hop radius `h = c_h * x * ceil(ln n)`.
    pub c_h: f64,
    /// Skeleton spacing; `None` picks `sqrt(k / messages per round)`.
    pub x: Option<f64>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { engine: SsspEngine::Exact, c_h: C_H, x: None, seed: 0 }
    }
}

impl PipelineConfig {
    /// Spacing for `k` sources, at least 1.
    pub fn spacing(&self, engine: &Engine<'_>, k: usize) -> f64 {
        self.x.unwrap_or_else(|| (k as f64 / engine.limits().message_capacity() as f64).sqrt()).max(1.0)
    }
}

/// The closest skeleton node of a source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Proxy {
    pub proxy: NodeId,
    /// `d_{h,G}(s, proxy)`.
    pub offset: u64,
}

/// `argmin_{w ∈ V_S} d_{h,G}(s, w)`, ties to the smallest id, from what `s`
/// learned while the skeleton was built.
pub fn find_proxy(skeleton: &SkeletonGraph, s: NodeId) -> Result<Proxy, KsspError> {
    skeleton
        .known_from(s)
        .iter()
        .min_by_key(|&&(w, d)| (d, w))
        .map(|&(proxy, offset)| Proxy { proxy, offset })
        .ok_or(KsspError::NoProxy { source_node: s, h: skeleton.h })
}

#[derive(Clone, Debug)]
struct Labels {
    key_bits: u32,
    entries: Vec<(usize, u64)>,
}

impl Payload for Labels {
    fn payload_bits(&self) -> u64 {
        self.entries.iter().map(|&(_, d)| (self.key_bits + bit_length(d)) as u64).sum()
    }
}

/// Exactly `h` rounds of Bellman-Ford over the local network, started from
/// arbitrary initial labels keyed by source index.
struct SeededBf {
    h: u32,
    key_bits: u32,
    best: BTreeMap<usize, u64>,
    changed: Vec<usize>,
}

impl NodeProgram for SeededBf {
    type Msg = Labels;

    fn step(&mut self, ctx: &mut Context<'_, Labels>) {
        let me = ctx.node();
        let g = ctx.graph();
        for (from, msg) in ctx.local_inbox() {
            let w = g.weight(me, *from).expect("neighbor");
            for &(key, d) in &msg.entries {
                if self.best.get(&key).is_none_or(|&b| d + w < b) {
                    self.best.insert(key, d + w);
                    self.changed.push(key);
                }
            }
        }
        if ctx.round() >= self.h as u64 {
            ctx.halt();
            return;
        }
        if !self.changed.is_empty() {
            self.changed.sort_unstable();
            self.changed.dedup();
            let entries: Vec<(usize, u64)> = self.changed.drain(..).map(|k| (k, self.best[&k])).collect();
            for a in g.neighbors(me) {
                ctx.send_local(a.node, Labels { key_bits: self.key_bits, entries: entries.clone() });
            }
        }
    }
}

/// `min over u, over paths of at most h hops, of init(u)[key] + length`
/// for every node, in `phase`.
fn hop_limited_relax(
    engine: &mut Engine<'_>,
    phase: &str,
    init: Vec<Vec<(usize, u64)>>,
    keys: usize,
    h: u32,
) -> Result<Vec<BTreeMap<usize, u64>>, KsspError> {
    let key_bits = bit_length(keys as u64);
    let programs: Vec<SeededBf> = init
        .into_iter()
        .map(|entries| SeededBf {
            h,
            key_bits,
            changed: entries.iter().map(|e| e.0).collect(),
            best: entries.into_iter().collect(),
        })
        .collect();
    let outer = engine.set_phase(phase);
    let result = engine.run(programs);
    engine.set_phase(&outer);
    Ok(result?.into_iter().map(|p| p.best).collect())
}

/// k-SSP when every source is a skeleton node: one SSSP instance per source
/// through the scheduler, then every node combines the labels of skeleton
/// nodes within `h` hops.
pub fn kssp_skeleton_sources(
    engine: &mut Engine<'_>,
    skeleton: &SkeletonGraph,
    sources: &[NodeId],
    cfg: &PipelineConfig,
) -> Result<DistanceTable, KsspError> {
    if let Some(&s) = sources.iter().find(|&&s| !skeleton.contains(s)) {
        return Err(KsspError::SourceNotInSkeleton(s));
    }
    let k = sources.len();
    let x = cfg.spacing(engine, k);
    let family = compute_helper_sets(engine, skeleton.nodes(), x)?;
    let labels = schedule_sssp(engine, skeleton, &family, sources, cfg)?;
    let n = engine.graph().node_count();
    let mut init = vec![Vec::new(); n];
    for (i, &u) in skeleton.nodes().iter().enumerate() {
        init[u.index()] = (0..k).filter_map(|j| labels[j][i].finite().map(|d| (j, d))).collect();
    }
    let relaxed = hop_limited_relax(engine, "kssp.post", init, k, skeleton.h)?;
    let rows = relaxed
        .into_iter()
        .enumerate()
        .map(|(v, best)| match skeleton.index_of(NodeId::from_index(v)) {
            Some(i) => (0..k).map(|j| labels[j][i]).collect(),
            None => (0..k).map(|j| best.get(&j).map_or(Dist::Infinite, |&d| Dist::Finite(d))).collect(),
        })
        .collect();
    Ok(DistanceTable::new(sources.to_vec(), rows, Stretch::new(1, cfg.engine.eps())))
}

/// Runs one SSSP instance per source through the helpers; returns
/// `labels[j][i]` for source `j` at skeleton node `i`.
fn schedule_sssp(
    engine: &mut Engine<'_>,
    skeleton: &SkeletonGraph,
    family: &HelperFamily,
    sources: &[NodeId],
    cfg: &PipelineConfig,
) -> Result<Vec<Vec<Dist>>, KsspError> {
    let assignment = assign_algorithms(skeleton, family, sources.len())?;
    let algorithms: Vec<SkeletonSssp> = sources.iter().map(|&s| cfg.engine.algorithm(s, skeleton)).collect();
    let run = run_scheduled(engine, skeleton, &assignment, &algorithms)?;
    info!(
        "scheduled {} instances: {} simulated rounds, slot {} rounds, l = {}",
        sources.len(),
        run.simulated_rounds,
        run.slot_rounds,
        assignment.ell
    );
    Ok(run.states.into_iter().map(|states| states.into_iter().map(|s| s.dist()).collect()).collect())
}

/// Samples the skeleton with the spacing for `k` sources, adds `extra`
/// nodes, and builds its edges.
pub fn pipeline_skeleton(
    engine: &mut Engine<'_>,
    k: usize,
    extra: &[NodeId],
    cfg: &PipelineConfig,
) -> Result<SkeletonGraph, KsspError> {
    let n = engine.graph().node_count();
    let x = cfg.spacing(engine, k);
    let mut members = sample_skeleton(n, 1.0 / x, cfg.seed)?;
    members.extend_from_slice(extra);
    Ok(build_skeleton(engine, &members, hop_radius(cfg.c_h, x, n))?)
}

/// `k` distinct sources drawn uniformly at random.
pub fn random_sources(n: usize, k: usize, seed: u64) -> Vec<NodeId> {
    let mut all: Vec<NodeId> = (0..n).map(NodeId::from_index).collect();
    all.shuffle(&mut derived_rng(seed, &[stream::SOURCES]));
    all.truncate(k.min(n));
    all.sort_unstable();
    all
}

/// The `k` nodes closest in hops to `center` (ties to smaller ids), a
/// deliberately bunched source set.
pub fn clustered_sources(g: &crate::graph::WeightedGraph, center: NodeId, k: usize) -> Vec<NodeId> {
    let hops = crate::graph::hop_distances_from(g, center);
    let mut order: Vec<NodeId> = g.nodes().collect();
    order.sort_by_key(|v| (hops[v.index()], *v));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Random sources: with `k <= n^(2/3)` the sources join the skeleton;
/// beyond that the table comes from the arbitrary-source pipeline and is
/// marked delegated. With at most one message's worth of sources per round
/// the few-sources pipeline runs instead.
pub fn kssp_random_sources(engine: &mut Engine<'_>, k: usize, cfg: &PipelineConfig) -> Result<DistanceTable, KsspError> {
    let n = engine.graph().node_count();
    let sources = random_sources(n, k, cfg.seed);
    if sources.len() as u64 <= engine.limits().message_capacity() {
        return kssp_small(engine, &sources, cfg);
    }
    if (sources.len() as f64) <= (n as f64).powf(2.0 / 3.0) {
        let skeleton = pipeline_skeleton(engine, sources.len(), &sources, cfg)?;
        kssp_skeleton_sources(engine, &skeleton, &sources, cfg)
    } else {
        info!("k = {k} exceeds n^(2/3); delegating to the arbitrary-source pipeline");
        let mut table = kssp_arbitrary_sources(engine, &sources, cfg)?;
        table.delegated = true;
        Ok(table)
    }
}

/// Arbitrary sources: each source hands off to its closest skeleton node,
/// the proxies solve k-SSP on the skeleton, the `(source, proxy, offset)`
/// tokens reach everyone, and nodes near a source keep their exact
/// `h`-hop distance.
pub fn kssp_arbitrary_sources(
    engine: &mut Engine<'_>,
    sources: &[NodeId],
    cfg: &PipelineConfig,
) -> Result<DistanceTable, KsspError> {
    let g = engine.graph();
    let n = g.node_count();
    if let Some(&s) = sources.iter().find(|s| !g.contains(**s)) {
        return Err(KsspError::UnknownNode(s));
    }
    let k = sources.len();
    let cap = engine.limits().message_capacity();
    if k as u64 <= cap {
        return Err(KsspError::Precondition(format!(
            "arbitrary sources need more than {cap} sources (one round of global messages); got {k}"
        )));
    }
    let skeleton = pipeline_skeleton(engine, k, &[], cfg)?;
    let proxies: Vec<Proxy> = sources.iter().map(|&s| find_proxy(&skeleton, s)).collect::<Result<_, _>>()?;
    let mut distinct: Vec<NodeId> = proxies.iter().map(|p| p.proxy).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let inner = PipelineConfig { x: Some(cfg.spacing(engine, k)), ..cfg.clone() };
    let to_proxy = kssp_skeleton_sources(engine, &skeleton, &distinct, &inner)?;

    let tokens: Vec<Token> = sources
        .iter()
        .zip(&proxies)
        .map(|(&s, p)| Token { holder: s, words: vec![s.0 as u64, p.proxy.0 as u64, p.offset] })
        .collect();
    let msg_bits = token_message_bits(engine, &tokens, 1);
    let instances = (engine.limits().gamma / msg_bits).max(1) as usize;
    let report = token_dissemination(engine, &tokens, instances, cfg.seed)?;
    debug_assert!(report.complete(k));

    let init: Vec<Vec<(usize, u64)>> = (0..n)
        .map(|v| sources.iter().enumerate().filter(|(_, s)| s.index() == v).map(|(j, _)| (j, 0)).collect())
        .collect();
    let local = hop_limited_relax(engine, "kssp.local", init, k, skeleton.h)?;

    let rows = local
        .into_iter()
        .enumerate()
        .map(|(v, near)| {
            let v = NodeId::from_index(v);
            proxies
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let col = distinct.binary_search(&p.proxy).expect("proxy scheduled");
                    let via = to_proxy.get(v, col) + p.offset;
                    near.get(&j).map_or(via, |&d| via.min(Dist::Finite(d)))
                })
                .collect()
        })
        .collect();
    Ok(DistanceTable::new(sources.to_vec(), rows, Stretch::new(3, 3.0 * cfg.engine.eps())))
}

/// Few sources (at most one round of global messages' worth): the whole
/// graph is its own skeleton with `h = 1` and every node its own helper.
pub fn kssp_small(engine: &mut Engine<'_>, sources: &[NodeId], cfg: &PipelineConfig) -> Result<DistanceTable, KsspError> {
    let g = engine.graph();
    let cap = engine.limits().message_capacity();
    if sources.len() as u64 > cap {
        return Err(KsspError::Precondition(format!(
            "the few-sources pipeline takes at most {cap} sources; got {}",
            sources.len()
        )));
    }
    if let Some(&s) = sources.iter().find(|s| !g.contains(**s)) {
        return Err(KsspError::UnknownNode(s));
    }
    let all: Vec<NodeId> = g.nodes().collect();
    let skeleton = build_skeleton(engine, &all, 1)?;
    let family = HelperFamily {
        sets: all.iter().map(|&v| (v, vec![v])).collect(),
        mu: 1,
        max_overlap: 1,
        max_radius: 0,
    };
    let labels = schedule_sssp(engine, &skeleton, &family, sources, cfg)?;
    let rows = (0..g.node_count()).map(|i| labels.iter().map(|l| l[i]).collect()).collect();
    Ok(DistanceTable::new(sources.to_vec(), rows, Stretch::new(1, cfg.engine.eps())))
}
