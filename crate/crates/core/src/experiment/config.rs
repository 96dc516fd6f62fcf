use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::engine::{Bandwidth, GammaSpec, HybridConfig, ViolationMode};
use crate::error::ExperimentError;
use crate::graph::{log2_ceil, GraphKind, GraphSpec, WeightRange};
use crate::kssp::{PipelineConfig, SsspEngine};
use crate::skeleton::C_H;

use super::Check;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Skeleton,
    Random,
    Arbitrary,
    Small,
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "skeleton" => Ok(Pipeline::Skeleton),
            "random" => Ok(Pipeline::Random),
            "arbitrary" => Ok(Pipeline::Arbitrary),
            "small" => Ok(Pipeline::Small),
            _ => Err(format!("unknown pipeline {s:?} (skeleton, random, arbitrary, small)")),
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Skeleton => "skeleton",
            Pipeline::Random => "random",
            Pipeline::Arbitrary => "arbitrary",
            Pipeline::Small => "small",
        })
    }
}

/// Where sources go for the pipelines that take explicit sources.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Uniformly random distinct nodes.
    Random,
    /// The `k` nodes closest in hops to node 1.
    Clustered,
}

impl FromStr for Placement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Placement::Random),
            "clustered" => Ok(Placement::Clustered),
            _ => Err(format!("unknown source placement {s:?} (random, clustered)")),
        }
    }
}

/// One experiment: a graph family, network caps, a pipeline and the seeds
/// to run it on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub graph: GraphKind,
    pub n: usize,
    pub weights: Option<WeightRange>,
    pub hybrid: HybridConfig,
    pub pipeline: Pipeline,
    /// Source counts; `run` and `verify` use the first, `scale` all of them.
    pub k: Vec<usize>,
    pub engine: SsspEngine,
    pub sources: Placement,
    pub c_h: f64,
    pub x: Option<f64>,
    pub seeds: Vec<u64>,
    /// Invariant suites run for every seed.
    pub checks: Vec<Check>,
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub scaling: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphKind::Grid { rows: 16, cols: 16 },
            n: 256,
            weights: None,
            hybrid: HybridConfig::default(),
            pipeline: Pipeline::Arbitrary,
            k: vec![12],
            engine: SsspEngine::Exact,
            sources: Placement::Random,
            c_h: C_H,
            x: None,
            seeds: vec![0],
            checks: vec![Check::Stretch, Check::Bandwidth],
            report: None,
            table: None,
            scaling: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_list_with<T>(value: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    value.split(',').map(|v| f(v.trim())).collect()
}

impl ExperimentConfig {
    pub fn k(&self) -> usize {
        self.k[0]
    }

    pub fn graph_spec(&self, seed: u64) -> GraphSpec {
        GraphSpec { kind: self.graph, n: self.n, weights: self.weights, seed }
    }

    pub fn pipeline_config(&self, seed: u64) -> PipelineConfig {
        PipelineConfig { engine: self.engine, c_h: self.c_h, x: self.x, seed }
    }

    /// Messages of two words that fit in γ per round, the threshold between
    /// the few-sources and the scheduled pipelines.
    pub fn message_capacity(&self) -> u64 {
        self.hybrid.resolve(self.n).message_capacity()
    }

    /// Parses `key = value` lines; `#` starts a comment. Later keys
    /// override earlier ones.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = ExperimentConfig::default();
        let mut pending = Pending::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config { line: i + 1, reason: format!("expected key = value, got {line:?}") })?;
            cfg.set(&mut pending, key.trim(), value.trim())
                .map_err(|reason| ExperimentError::Config { line: i + 1, reason })?;
        }
        cfg.finish(pending)?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides on top of a parsed config.
    pub fn with_overrides(text: &str, overrides: &[String]) -> Result<Self, ExperimentError> {
        let mut all = text.to_string();
        for o in overrides {
            all.push('\n');
            all.push_str(o);
        }
        Self::parse(&all)
    }

    fn set(&mut self, p: &mut Pending, key: &str, value: &str) -> Result<(), String> {
        match key {
            "graph" => p.graph = Some(value.to_string()),
            "n" => p.n = Some(parse(key, value)?),
            "rows" => p.rows = Some(parse(key, value)?),
            "cols" => p.cols = Some(parse(key, value)?),
            "p" => p.p = Some(parse(key, value)?),
            "radius" => p.radius = Some(parse(key, value)?),
            "weight_min" => p.weight_min = Some(parse(key, value)?),
            "weight_max" => p.weight_max = Some(parse(key, value)?),
            "gamma" => {
                self.hybrid.gamma = match value {
                    "log2n2" => GammaSpec::Log2NSquared,
                    v => GammaSpec::Bits(parse(key, v)?),
                }
            }
            "gamma_factor" => p.gamma_factor = Some(parse(key, value)?),
            "lambda" => {
                self.hybrid.lambda = match value {
                    "unlimited" => Bandwidth::Unlimited,
                    v => Bandwidth::Bits(parse(key, v)?),
                }
            }
            "header_bits" => self.hybrid.header_bits = Some(parse(key, value)?),
            "mode" => {
                self.hybrid.violation_mode = match value {
                    "strict" => ViolationMode::Strict,
                    "adversarial" => ViolationMode::Adversarial,
                    _ => return Err(format!("unknown mode {value:?} (strict, adversarial)")),
                }
            }
            "max_rounds" => self.hybrid.max_rounds = parse(key, value)?,
            "pipeline" => self.pipeline = value.parse()?,
            "k" => self.k = parse_list(key, value)?,
            "engine" => p.engine = Some(value.to_string()),
            "eps" => p.eps = Some(parse(key, value)?),
            "sources" => self.sources = value.parse()?,
            "c_h" => self.c_h = parse(key, value)?,
            "x" => self.x = Some(parse(key, value)?),
            "seeds" => self.seeds = parse_list(key, value)?,
            "checks" => {
                self.checks = match value {
                    "all" => Check::ALL.to_vec(),
                    v => parse_list_with(v, str::parse)?,
                }
            }
            "report" => self.report = Some(PathBuf::from(value)),
            "table" => self.table = Some(PathBuf::from(value)),
            "scaling" => self.scaling = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn finish(&mut self, p: Pending) -> Result<(), ExperimentError> {
        let invalid = |m: String| ExperimentError::Invalid(m);
        let graph = p.graph.as_deref().unwrap_or("grid");
        self.graph = match graph {
            "path" => GraphKind::Path,
            "cycle" => GraphKind::Cycle,
            "grid" => {
                let (rows, cols) = match (p.rows, p.cols, p.n) {
                    (Some(r), Some(c), _) => (r, c),
                    (None, None, Some(n)) => {
                        let side = (n as f64).sqrt().round() as usize;
                        (side, side)
                    }
                    (None, None, None) => (16, 16),
                    _ => return Err(invalid("grid needs both rows and cols".into())),
                };
                GraphKind::Grid { rows, cols }
            }
            "random-connected" => GraphKind::RandomConnected { p: p.p.ok_or_else(|| invalid("random-connected needs p".into()))? },
            "random-geometric" => {
                let n = p.n.ok_or_else(|| invalid("random-geometric needs n".into()))?;
                let r = p.radius.unwrap_or_else(|| (8.0 / (std::f64::consts::PI * n as f64)).sqrt());
                GraphKind::RandomGeometric { radius: r }
            }
            g => return Err(invalid(format!("unknown graph {g:?}"))),
        };
        self.n = match self.graph {
            GraphKind::Grid { rows, cols } => {
                if p.n.is_some_and(|n| n != rows * cols) {
                    return Err(invalid(format!("n must equal rows * cols = {}", rows * cols)));
                }
                rows * cols
            }
            _ => p.n.ok_or_else(|| invalid("n is required".into()))?,
        };
        if self.n < 2 {
            return Err(invalid("n must be at least 2".into()));
        }
        self.weights = match (p.weight_min, p.weight_max) {
            (None, None) => None,
            (lo, hi) => Some(WeightRange { lo: lo.unwrap_or(1), hi: hi.unwrap_or(self.n as u64 * self.n as u64) }),
        };
        if let Some(f) = p.gamma_factor {
            let base = self.hybrid.resolve(self.n).gamma;
            self.hybrid.gamma = GammaSpec::Bits(base * f);
        }
        let eps = p.eps.unwrap_or(0.25);
        self.engine = match p.engine.as_deref().unwrap_or("exact") {
            "exact" => SsspEngine::Exact,
            "rounding" => {
                if !(eps > 0.0 && eps <= 1.0) {
                    return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
                }
                SsspEngine::Rounding { eps }
            }
            e => return Err(invalid(format!("unknown engine {e:?} (exact, rounding)"))),
        };
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(invalid("k must list positive source counts".into()));
        }
        if let Some(&k) = self.k.iter().find(|&&k| k > self.n) {
            return Err(invalid(format!("k = {k} exceeds n = {}", self.n)));
        }
        if self.seeds.is_empty() {
            return Err(invalid("at least one seed is required".into()));
        }
        if !(self.c_h > 0.0) || self.x.is_some_and(|x| !(x >= 1.0)) {
            return Err(invalid("c_h must be positive and x at least 1".into()));
        }
        self.checks.sort_unstable();
        self.checks.dedup();
        let cap = self.message_capacity();
        let log = log2_ceil(self.n);
        for &k in &self.k {
            match self.pipeline {
                Pipeline::Arbitrary | Pipeline::Skeleton if k as u64 <= cap => {
                    return Err(invalid(format!(
                        "pipeline {} needs k greater than the {cap} messages per round γ allows \
                         (γ = {} bits, n = {}, log n = {log}); got k = {k}, use pipeline small",
                        self.pipeline,
                        self.hybrid.resolve(self.n).gamma,
                        self.n
                    )));
                }
                Pipeline::Small if k as u64 > cap => {
                    return Err(invalid(format!(
                        "pipeline small takes at most {cap} sources; got k = {k}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Pending {
    graph: Option<String>,
    n: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    p: Option<f64>,
    radius: Option<f64>,
    weight_min: Option<u64>,
    weight_max: Option<u64>,
    gamma_factor: Option<u64>,
    engine: Option<String>,
    eps: Option<f64>,
}
