use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hybrid_kssp::experiment::{emit_scaling_table, run_experiment, ExperimentConfig, ExperimentReport};
use hybrid_kssp::graph::{generate_graph, write_edge_list};
use log::info;

/// Runs k-source shortest path experiments on the HYBRID network simulator.
#[derive(Parser)]
#[command(name = "hybrid-kssp", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Write the edge list (`u v w` per line) of the configured graph.
    Generate {
        #[command(flatten)]
        opts: Opts,
        /// Output file; one file per seed with `-s<seed>` appended when there
        /// are several seeds. Defaults to stdout for the first seed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline on every seed and print a summary.
    Run(Opts),
    /// Like `run`, with every invariant suite enabled unless `checks` is set.
    Verify(Opts),
    /// Run once per listed `k` and print the scaling table.
    Scale(Opts),
}

#[derive(Args)]
struct Opts {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Extra `key=value` override, applied after the file and the flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    pipeline: Option<String>,
    /// Source count, or a comma list for `scale`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    sources: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    report: Option<String>,
    #[arg(long)]
    table: Option<String>,
    #[arg(long)]
    scaling: Option<String>,
}

impl Opts {
    /// `forced` lines go after the file and before the flags.
    fn load(&self, forced: &[&str], default_checks: Option<&str>) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            None => String::new(),
        };
        let mut overrides: Vec<String> = forced.iter().map(|s| s.to_string()).collect();
        let explicit_checks = self.checks.is_some() || self.set.iter().any(|s| s.trim_start().starts_with("checks"));
        if let (Some(c), false) = (default_checks, explicit_checks) {
            overrides.push(format!("checks = {c}"));
        }
        let flags = [
            ("graph", &self.graph),
            ("n", &self.n),
            ("rows", &self.rows),
            ("cols", &self.cols),
            ("p", &self.p),
            ("radius", &self.radius),
            ("gamma", &self.gamma),
            ("mode", &self.mode),
            ("pipeline", &self.pipeline),
            ("k", &self.k),
            ("engine", &self.engine),
            ("eps", &self.eps),
            ("sources", &self.sources),
            ("seeds", &self.seeds),
            ("checks", &self.checks),
            ("report", &self.report),
            ("table", &self.table),
            ("scaling", &self.scaling),
        ];
        overrides.extend(flags.iter().filter_map(|(k, v)| v.as_ref().map(|v| format!("{k} = {v}"))));
        overrides.extend(self.set.iter().cloned());
        Ok(ExperimentConfig::with_overrides(&text, &overrides)?)
    }
}

fn summarize(report: &ExperimentReport) {
    for r in &report.runs {
        println!(
            "seed {}: n={} k={} rounds={} scheduled={} stretch max={:.4} mean={:.4} (bound {}) gamma max sent/recv={}/{} of {} {}",
            r.seed,
            r.nodes,
            r.k,
            r.total_rounds,
            r.scheduled_rounds,
            r.stretch.max,
            r.stretch.mean,
            r.stretch.label,
            r.bandwidth.max_global_sent,
            r.bandwidth.max_global_recv,
            r.bandwidth.gamma,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    for (seed, check, detail) in report.failures() {
        eprintln!("seed {seed}: check {check} failed: {detail}");
    }
}

fn exit(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.verb {
        Verb::Generate { opts, out } => {
            // Only the graph matters here.
            let cfg = opts.load(&["pipeline = random", "k = 1", "checks = stretch"], None)?;
            let seeds = if out.is_some() { cfg.seeds.clone() } else { vec![cfg.seeds[0]] };
            for &seed in &seeds {
                let g = generate_graph(&cfg.graph_spec(seed))?;
                info!("seed {seed}: {} nodes, {} edges", g.node_count(), g.edge_count());
                match &out {
                    Some(path) => {
                        let path = if seeds.len() == 1 {
                            path.clone()
                        } else {
                            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("graph");
                            let ext = path.extension().and_then(|e| e.to_str()).map(|e| format!(".{e}")).unwrap_or_default();
                            path.with_file_name(format!("{stem}-s{seed}{ext}"))
                        };
                        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                        write_edge_list(&g, &mut w)?;
                        w.flush()?;
                    }
                    None => write_edge_list(&g, io::stdout().lock())?,
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Verb::Run(opts) => {
            let report = run_experiment(&opts.load(&[], None)?)?;
            summarize(&report);
            Ok(exit(report.pass))
        }
        Verb::Verify(opts) => {
            let report = run_experiment(&opts.load(&[], Some("all"))?)?;
            summarize(&report);
            Ok(exit(report.pass))
        }
        Verb::Scale(opts) => {
            let cfg = opts.load(&[], None)?;
            let table = emit_scaling_table(&cfg)?;
            if cfg.scaling.is_none() {
                table.write_csv(io::stdout().lock())?;
            }
            for report in &table.reports {
                for (seed, check, detail) in report.failures() {
                    eprintln!("k {} seed {seed}: check {check} failed: {detail}", report.config.k());
                }
            }
            Ok(exit(table.pass()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
