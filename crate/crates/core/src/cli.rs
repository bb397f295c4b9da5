//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 rule
//! error, 4 query error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::bench::{
    build_report, pipeline_timings, sweep_scalability, time_queries, write_artifacts, write_timing, MetricsReport,
    TimingReport,
};
use crate::edge::PipelineKind;
use crate::kg::{parse_ntriples, parse_query, run_query, Seed};
use crate::scenario::{
    accounting_model, prepare, run_one, run_scenario, ConfigError, Resources, ScenarioConfig, ScenarioError,
};
use crate::sensorgen::write_csv;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RULE: i32 = 3;
pub const EXIT_QUERY: i32 = 4;

/// Query samples per class for the latency table.
const QUERY_SAMPLES: usize = 20;

const QUERY_HELP: &str = "\
Runs one query against an exported graph and prints one result per line.

Query forms:
  lookup <entity>                              outgoing edges of an entity
  traverse <entity> <predicate> [out|in]       one-hop neighbours
  hops <entity> <depth> <pred>[,<pred>...]     reachable entities with hop counts
  match <s> <p> <o> [. <s> <p> <o> ...]        conjunctive pattern, sorted bindings
  series <category|*> <from> <to> <count|mean|max>
                                               per-step aggregate of reading values

In match patterns ?x is a variable, \"text\" a string, @12 a step and a bare
number a real value; anything else is an entity id.

Examples:
  lookup sensor/3/noise_level
  traverse location/3 locatedAt in
  hops sensor/3/noise_level 3 locatedAt,partOf,adjacentTo
  match ?s locatedAt ?l . ?l partOf district/central . ?r producedBy ?s . ?r indicates ?a
  series vibration 0 2000 max";

#[derive(Debug, Parser)]
#[command(name = "urbanedge", version, about = "Seeded edge-to-cloud smart-city filtering simulator")]
pub struct Cli {
    /// Scenario file; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for running pipelines.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Writes the labeled dataset and its label list.
    Generate,
    /// Runs the selected pipelines end to end and writes all reports.
    Run {
        /// Skips the scalability sweep.
        #[arg(long)]
        no_sweep: bool,
        /// Only these pipelines, comma separated.
        #[arg(long, value_delimiter = ',')]
        pipelines: Option<Vec<PipelineKind>>,
    },
    /// Queries an exported N-Triples graph.
    #[command(long_about = QUERY_HELP)]
    Query {
        /// Graph file written by `run`.
        graph: PathBuf,
        /// The query text.
        query: String,
    },
    /// Solves accounting coefficients from the centralized run.
    Calibrate,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Rule(String),
    #[error("{0}")]
    Query(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Rule(_) => EXIT_RULE,
            CliError::Query(_) => EXIT_QUERY,
            CliError::Other(_) => EXIT_OTHER,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_rule_error() {
            return CliError::Rule(e.to_string());
        }
        match e {
            ScenarioError::Config(c) => CliError::Config(c),
            other => CliError::Other(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Other(format!("{}: {e}", path.display()))
}

/// Loads the scenario and applies command-line overrides.
pub fn load_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_generate(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    cfg.prepare_output()?;
    let prepared = prepare(cfg)?;
    let readings = &prepared.dataset.readings;
    let data = cfg.output.join("dataset.csv");
    let f = std::fs::File::create(&data).map_err(io_err(&data))?;
    write_csv(readings, std::io::BufWriter::new(f)).map_err(|e| CliError::Other(e.to_string()))?;
    let labels = cfg.output.join("labels.csv");
    let f = std::fs::File::create(&labels).map_err(io_err(&labels))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let csv_err = |e: csv::Error| CliError::Other(e.to_string());
    w.write_record(["row", "t", "location", "category", "label", "group"]).map_err(csv_err)?;
    let mut labeled = 0;
    for (i, r) in readings.iter().enumerate() {
        if let Some(l) = r.label {
            labeled += 1;
            w.write_record([
                i.to_string(),
                r.t.to_string(),
                r.location.to_string(),
                r.kind.name().to_string(),
                l.kind.name().to_string(),
                l.group.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(&labels))?;
    let _ = writeln!(
        out,
        "{} readings, {} labeled, written to {}",
        readings.len(),
        labeled,
        cfg.output.display()
    );
    Ok(vec![data, labels])
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub timing: TimingReport,
    pub files: Vec<PathBuf>,
}

pub fn cmd_run(cfg: &ScenarioConfig, sweep: bool, out: &mut dyn Write) -> Result<RunOutput, CliError> {
    cfg.prepare_output()?;
    let run = run_scenario(cfg)?;
    let report = build_report(cfg, &run);
    let mut files = write_artifacts(&cfg.output, &report, &run).map_err(io_err(&cfg.output))?;
    let queries = match run.results.last() {
        Some(r) => time_queries(r.graph.state(), cfg.seed, QUERY_SAMPLES).map_err(|e| CliError::Other(e.to_string()))?,
        None => Vec::new(),
    };
    let scalability = if sweep && !cfg.sweep.scales.is_empty() {
        sweep_scalability(&cfg.sweep.scales, &cfg.sweep.pipelines, cfg, cfg.sweep.repeats)?
    } else {
        Vec::new()
    };
    let timing = TimingReport {
        pipelines: pipeline_timings(&run),
        queries,
        scalability,
    };
    files.extend(write_timing(&cfg.output, &timing).map_err(io_err(&cfg.output))?);
    let _ = writeln!(
        out,
        "{:<18} {:>9} {:>9} {:>9} {:>9} {:>10} {:>10}",
        "pipeline", "precision", "recall", "f1", "fpr", "reduction", "energy"
    );
    for p in &report.pipelines {
        let d = &p.detection;
        let _ = writeln!(
            out,
            "{:<18} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.1}% {:>10.1}",
            p.pipeline.name(),
            d.precision,
            d.recall,
            d.f1,
            d.fpr,
            100.0 * p.reduction,
            p.energy.total
        );
    }
    let _ = writeln!(out, "wrote {} files to {}", files.len(), cfg.output.display());
    Ok(RunOutput { report, timing, files })
}

pub fn cmd_query(graph: &Path, query: &str, seed: &Seed, out: &mut dyn Write) -> Result<usize, CliError> {
    let q = parse_query(query).map_err(|e| {
        CliError::Query(format!("query: {e}\n  {query}\n  {:>width$}", "^", width = e.column))
    })?;
    let text = std::fs::read_to_string(graph).map_err(io_err(graph))?;
    let g = parse_ntriples(&text, &seed.ontology).map_err(|e| CliError::Other(format!("{}: {e}", graph.display())))?;
    let result = run_query(g.state(), &q).map_err(|e| CliError::Query(format!("query: {e}")))?;
    let rendered = result.render();
    let _ = out.write_all(rendered.as_bytes());
    Ok(rendered.lines().count())
}

pub fn cmd_calibrate(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<crate::bench::AccountingModel, CliError> {
    let res = Resources::load(cfg)?;
    let prepared = prepare(cfg)?;
    let centralized = run_one(PipelineKind::Centralized, cfg, &res, &prepared)?;
    let mut fresh = cfg.clone();
    fresh.accounting.model = None;
    let model = accounting_model(&fresh, &centralized.volumes(prepared.dataset.horizon_days()))
        .map_err(|e| CliError::Other(e.to_string()))?;
    #[derive(serde::Serialize)]
    struct Block<'a> {
        model: &'a crate::bench::AccountingModel,
    }
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        accounting: Block<'a>,
    }
    let text = toml::to_string(&Doc {
        accounting: Block { model: &model },
    })
    .map_err(|e| CliError::Other(e.to_string()))?;
    let _ = out.write_all(text.as_bytes());
    Ok(model)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate => cmd_generate(&load_config(cli)?, out).map(drop),
        Command::Run { no_sweep, pipelines } => {
            let mut cfg = load_config(cli)?;
            if let Some(p) = pipelines {
                cfg.pipelines = p.clone();
                cfg.validate()?;
            }
            cmd_run(&cfg, !no_sweep, out).map(drop)
        }
        Command::Query { graph, query } => {
            let seed = match &cli.config {
                Some(_) => Resources::load(&load_config(cli)?)?.seed,
                None => Seed::default_seed(),
            };
            cmd_query(graph, query, &seed, out).map(drop)
        }
        Command::Calibrate => cmd_calibrate(&load_config(cli)?, out).map(drop),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
