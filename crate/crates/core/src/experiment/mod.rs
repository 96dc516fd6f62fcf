//! Experiment configs, per-seed reports and scaling tables.

mod checks;
mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use rand::seq::SliceRandom;
use serde::Serialize;

pub use checks::{decomposition_check, run_check, skeleton_check, token_load_bound, Check, CheckOutcome, DECOMPOSITION_C};
pub use config::{ExperimentConfig, Pipeline, Placement};

use crate::engine::{Engine, HybridConfig, PhaseSummary, ViolationMode};
use crate::error::ExperimentError;
use crate::graph::{generate_graph, hop_distances_from, NodeId};
use crate::kssp::{
    check_table, clustered_sources, kssp_arbitrary_sources, kssp_random_sources, kssp_skeleton_sources, kssp_small,
    pipeline_skeleton, random_sources, DistanceTable,
};
use crate::rng::{derived_rng, stream};

/// Ledger phases that make up the scheduled part of a pipeline: skeleton
/// construction, helper sets, and the scheduler itself.
pub const SCHEDULED_PHASES: [&str; 3] = ["skeleton.build", "helpers", "sched."];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StretchStats {
    pub declared: f64,
    pub label: String,
    pub max: f64,
    pub mean: f64,
    pub pairs: usize,
    pub underestimates: usize,
    pub over_stretch: usize,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BandwidthStats {
    pub gamma: u64,
    /// Largest global bits any node sent in one round.
    pub max_global_sent: u64,
    pub max_global_recv: u64,
    pub dropped: u64,
}

impl BandwidthStats {
    pub fn within_cap(&self) -> bool {
        self.max_global_sent <= self.gamma && self.max_global_recv <= self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub k: usize,
    pub sources: Vec<NodeId>,
    pub delegated: bool,
    pub stretch: StretchStats,
    pub total_rounds: u64,
    pub scheduled_rounds: u64,
    pub phases: BTreeMap<String, PhaseSummary>,
    pub bandwidth: BandwidthStats,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedReport>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String, ExperimentError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn failures(&self) -> Vec<(u64, Check, String)> {
        self.runs
            .iter()
            .flat_map(|r| r.checks.iter().filter(|c| !c.pass).map(|c| (r.seed, c.check, c.detail.clone())))
            .collect()
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), ExperimentError>) -> Result<(), ExperimentError> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// `path` itself for single-seed runs, otherwise `stem-s<seed>.ext`.
fn per_seed_path(path: &Path, seed: u64, seeds: usize) -> PathBuf {
    if seeds == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-s{seed}.{ext}"),
        None => format!("{stem}-s{seed}"),
    };
    path.with_file_name(name)
}

fn pick_sources(cfg: &ExperimentConfig, g: &crate::graph::WeightedGraph, seed: u64) -> Vec<NodeId> {
    match cfg.sources {
        Placement::Random => random_sources(g.node_count(), cfg.k(), seed),
        Placement::Clustered => clustered_sources(g, NodeId(1), cfg.k()),
    }
}

/// Runs the configured pipeline and invariant suites for one seed.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<(SeedReport, DistanceTable), ExperimentError> {
    let g = generate_graph(&cfg.graph_spec(seed))?;
    let mut engine = Engine::new(&g, HybridConfig { seed, ..cfg.hybrid });
    let pc = cfg.pipeline_config(seed);
    let k = cfg.k();
    let table = match cfg.pipeline {
        Pipeline::Random => kssp_random_sources(&mut engine, k, &pc)?,
        Pipeline::Arbitrary => kssp_arbitrary_sources(&mut engine, &pick_sources(cfg, &g, seed), &pc)?,
        Pipeline::Small => kssp_small(&mut engine, &pick_sources(cfg, &g, seed), &pc)?,
        Pipeline::Skeleton => {
            let s = pipeline_skeleton(&mut engine, k, &[], &pc)?;
            if s.len() < k {
                return Err(ExperimentError::Invalid(format!("skeleton has {} nodes, fewer than k = {k}", s.len())));
            }
            let mut members = s.nodes().to_vec();
            match cfg.sources {
                Placement::Random => members.shuffle(&mut derived_rng(seed, &[stream::SOURCES])),
                Placement::Clustered => {
                    let hops = hop_distances_from(&g, NodeId(1));
                    members.sort_by_key(|v| (hops[v.index()], *v));
                }
            }
            members.truncate(k);
            members.sort_unstable();
            kssp_skeleton_sources(&mut engine, &s, &members, &pc)?
        }
    };
    let tc = check_table(&g, &table);
    let ledger = engine.ledger();
    let bandwidth = BandwidthStats {
        gamma: engine.limits().gamma,
        max_global_sent: ledger.max_global_sent(),
        max_global_recv: ledger.max_global_recv(),
        dropped: engine.dropped_messages(),
    };
    let scheduled_rounds = SCHEDULED_PHASES.iter().map(|p| ledger.rounds_with_prefix(p)).sum();
    let mut checks = Vec::new();
    for &check in &cfg.checks {
        checks.push(match check {
            Check::Stretch => CheckOutcome::new(
                check,
                tc.sound(),
                format!(
                    "max {} (declared {}), {} below true distance, {} above bound",
                    tc.max_ratio, table.stretch.label, tc.underestimates, tc.over_stretch
                ),
            ),
            Check::Bandwidth => {
                let clean = bandwidth.within_cap()
                    && (cfg.hybrid.violation_mode == ViolationMode::Adversarial || bandwidth.dropped == 0);
                CheckOutcome::new(
                    check,
                    clean,
                    format!(
                        "max sent {} / recv {} of {} bits, {} dropped",
                        bandwidth.max_global_sent, bandwidth.max_global_recv, bandwidth.gamma, bandwidth.dropped
                    ),
                )
            }
            other => run_check(other, cfg, &g, seed)?,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = SeedReport {
        seed,
        nodes: g.node_count(),
        edges: g.edge_count(),
        k,
        sources: table.sources().to_vec(),
        delegated: table.delegated,
        stretch: StretchStats {
            declared: table.stretch.alpha,
            label: table.stretch.label.clone(),
            max: tc.max_ratio,
            mean: tc.mean_ratio,
            pairs: tc.pairs,
            underestimates: tc.underestimates,
            over_stretch: tc.over_stretch,
            exact: tc.exact,
        },
        total_rounds: ledger.rounds(),
        scheduled_rounds,
        phases: ledger.summaries(),
        bandwidth,
        checks,
        pass,
    };
    Ok((report, table))
}

/// Runs every seed of `cfg` in order. Writes the JSON report and the
/// distance tables when their paths are configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let (report, table) = run_seed(cfg, seed)?;
        info!(
            "seed {seed}: {} rounds ({} scheduled), max stretch {}, pass {}",
            report.total_rounds, report.scheduled_rounds, report.stretch.max, report.pass
        );
        if let Some(path) = &cfg.table {
            write_file(&per_seed_path(path, seed, cfg.seeds.len()), |w| Ok(table.write_csv(w)?))?;
        }
        runs.push(report);
    }
    let pass = runs.iter().all(|r| r.pass);
    let report = ExperimentReport { config: cfg.clone(), runs, pass };
    if let Some(path) = &cfg.report {
        let json = report.to_json()?;
        write_file(path, |w| Ok(w.write_all(json.as_bytes())?))?;
    }
    Ok(report)
}

/// Upper median.
pub fn median(values: &[u64]) -> u64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[v.len() / 2]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub k: usize,
    /// Median over seeds of the scheduled-phase rounds.
    pub median_rounds: u64,
    /// `median_rounds` over the previous row's.
    pub ratio: Option<f64>,
    pub median_total_rounds: u64,
    pub total_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub reports: Vec<ExperimentReport>,
}

impl ScalingTable {
    /// CSV with header `k,median_rounds,ratio,median_total_rounds,total_ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// One experiment per listed `k` on the same seeds; rounds are compared
/// between successive rows. The `k` values must form a geometric
/// progression of at least three terms.
pub fn emit_scaling_table(cfg: &ExperimentConfig) -> Result<ScalingTable, ExperimentError> {
    let ks = &cfg.k;
    let geometric = ks.len() >= 3 && ks[1] > ks[0] && ks.windows(3).all(|w| w[0] * w[2] == w[1] * w[1]);
    if !geometric {
        return Err(ExperimentError::Invalid(format!(
            "scaling needs at least three k values in geometric progression, got {ks:?}"
        )));
    }
    let mut rows: Vec<ScalingRow> = Vec::new();
    let mut reports = Vec::new();
    for &k in ks {
        let one = ExperimentConfig { k: vec![k], report: None, table: None, scaling: None, ..cfg.clone() };
        let report = run_experiment(&one)?;
        let sched: Vec<u64> = report.runs.iter().map(|r| r.scheduled_rounds).collect();
        let total: Vec<u64> = report.runs.iter().map(|r| r.total_rounds).collect();
        let (median_rounds, median_total_rounds) = (median(&sched), median(&total));
        let prev = rows.last();
        rows.push(ScalingRow {
            k,
            median_rounds,
            ratio: prev.map(|p| median_rounds as f64 / p.median_rounds as f64),
            median_total_rounds,
            total_ratio: prev.map(|p| median_total_rounds as f64 / p.median_total_rounds as f64),
        });
        reports.push(report);
    }
    let table = ScalingTable { rows, reports };
    if let Some(path) = &cfg.scaling {
        write_file(path, |w| Ok(table.write_csv(w)?))?;
    }
    if let Some(path) = &cfg.report {
        let json = serde_json::to_string_pretty(&table)? + "\n";
        write_file(path, |w| Ok(w.write_all(json.as_bytes())?))?;
    }
    Ok(table)
}
