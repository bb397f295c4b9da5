//! Scenario files and end-to-end orchestration: generate, inject, filter,
//! transmit, ingest, score.

mod config;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::config::{
    AccountingBlock, ConfigError, DatasetBlock, KgBlock, ProviderConfig, RulesBlock, ScenarioConfig, SweepBlock,
    EXAMPLE_SCENARIO,
};
use crate::anomaly::{inject, InjectError, InjectionReport};
use crate::bench::{
    account, byte_totals, calibrate, quantile, raw_bytes_by_family, score_detection, truth_mask, Accounting,
    AccountingError, AccountingModel, ByteTotals, DetectionScores, RunVolumes,
};
use crate::edge::{run_pipeline, EdgeError, EdgeRun, Pipeline, PipelineKind, StaticThresholds, EXPERT_RULES};
use crate::kg::{KgError, KnowledgeGraph, Seed};
use crate::rules::{DeterministicProvider, PhysicsConstraints, RuleEngine, RuleProvider};
use crate::sensorgen::{generate_dataset, read_csv, CsvError, Dataset, Family, GenError};
use crate::transport::{transmit, DeliveryRecord, TransportError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset: {0}")]
    Generate(#[from] GenError),
    #[error("injection: {0}")]
    Inject(#[from] InjectError),
    #[error("{path}: {source}")]
    Csv { path: String, source: CsvError },
    #[error("{0}")]
    Edge(#[from] EdgeError),
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error("knowledge graph: {0}")]
    Kg(#[from] KgError),
    #[error("accounting: {0}")]
    Accounting(#[from] AccountingError),
}

impl ScenarioError {
    /// Whether the failure is a rule file or rule grammar problem.
    pub fn is_rule_error(&self) -> bool {
        matches!(self, ScenarioError::Edge(EdgeError::ExpertRules(_) | EdgeError::Rule(_)))
    }
}

fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Files a scenario refers to, loaded once.
#[derive(Debug, Clone)]
pub struct Resources {
    pub expert_rules: String,
    pub constraint_overrides: Option<String>,
    pub seed: Seed,
}

impl Resources {
    pub fn load(cfg: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let expert_rules = match &cfg.expert_rules {
            Some(p) => read_file(p)?,
            None => EXPERT_RULES.to_string(),
        };
        let constraint_overrides = cfg.rules.constraints.as_deref().map(read_file).transpose()?;
        let seed = match &cfg.kg.ontology {
            Some(p) => Seed::parse(&read_file(p)?)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))?,
            None => Seed::default_seed(),
        };
        Ok(Self {
            expert_rules,
            constraint_overrides,
            seed,
        })
    }
}

/// A labeled dataset with its scoring mask.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    /// Absent when readings came from a file.
    pub injection: Option<InjectionReport>,
    pub mask: Vec<Option<bool>>,
    pub raw_by_family: BTreeMap<Family, u64>,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, ScenarioError> {
    let dcfg = cfg.dataset.to_config();
    let (dataset, injection) = match &cfg.dataset.input {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let readings = read_csv(file).map_err(|source| ScenarioError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let dataset = Dataset {
                clock: dcfg.clock(),
                horizon_steps: dcfg.horizon_steps(),
                locations: dcfg.locations,
                generators: dcfg.table()?,
                readings,
            };
            (dataset, None)
        }
        None => {
            let mut ds = generate_dataset(&dcfg, cfg.seed)?;
            let (readings, report) = inject(ds.readings, &cfg.injection, &ds.generators, &ds.clock, cfg.seed)?;
            ds.readings = readings;
            (ds, Some(report))
        }
    };
    Ok(Prepared {
        mask: truth_mask(&dataset.readings),
        raw_by_family: raw_bytes_by_family(&dataset.readings, &cfg.edge.bytes),
        dataset,
        injection,
    })
}

pub fn build_pipeline(
    kind: PipelineKind,
    cfg: &ScenarioConfig,
    res: &Resources,
    ds: &Dataset,
) -> Result<Pipeline, ScenarioError> {
    Ok(match kind {
        PipelineKind::Centralized => Pipeline::Centralized,
        PipelineKind::StaticThreshold => {
            Pipeline::StaticThreshold(StaticThresholds::from_profile(&ds.generators, cfg.edge.static_margin))
        }
        PipelineKind::Statistical => Pipeline::statistical(cfg.edge.statistical_window, cfg.edge.statistical_z)?,
        PipelineKind::Expert => Pipeline::expert(&res.expert_rules)?,
        PipelineKind::Adaptive => {
            let mut constraints = PhysicsConstraints::from_generators(&ds.generators);
            constraints.locations = Some(ds.locations);
            if let Some(text) = &res.constraint_overrides {
                constraints = constraints
                    .with_overrides(text, &ds.generators)
                    .map_err(|e| ConfigError::Invalid(format!("rules.constraints: {e}")))?;
            }
            let r = &cfg.rules;
            let provider: Box<dyn RuleProvider> = match r.provider.external() {
                Some(p) => Box::new(p),
                None => Box::new(DeterministicProvider {
                    policy: r.policy.clone(),
                }),
            };
            Pipeline::Adaptive(Box::new(RuleEngine::new(
                provider,
                r.policy.clone(),
                constraints,
                r.weights,
                r.history_depth,
                r.ttl,
            )))
        }
    })
}

/// End-to-end latency of delivered readings, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencySummary {
    pub delivered_readings: u64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

pub fn latency_summary(run: &EdgeRun, deliveries: &[DeliveryRecord]) -> LatencySummary {
    let mut lat: Vec<f64> = run
        .packets
        .iter()
        .zip(deliveries)
        .filter_map(|(p, d)| d.delivered_at().map(|at| (p, at)))
        .flat_map(|(p, at)| p.items.iter().map(move |i| at.saturating_sub(i.reading.t) as f64))
        .collect();
    lat.sort_by(f64::total_cmp);
    LatencySummary {
        delivered_readings: lat.len() as u64,
        p50: quantile(&lat, 0.5),
        p95: quantile(&lat, 0.95),
        max: lat.last().copied().unwrap_or(0.0),
    }
}

/// Everything one pipeline produced.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub kind: PipelineKind,
    pub run: EdgeRun,
    pub deliveries: Vec<DeliveryRecord>,
    pub bytes: ByteTotals,
    pub detection: DetectionScores,
    pub latency: LatencySummary,
    pub graph: KnowledgeGraph,
    pub wall: Duration,
}

impl PipelineResult {
    pub fn volumes(&self, days: f64) -> RunVolumes {
        RunVolumes::new(self.run.work, &self.bytes, days)
    }
}

pub fn run_one(
    kind: PipelineKind,
    cfg: &ScenarioConfig,
    res: &Resources,
    prepared: &Prepared,
) -> Result<PipelineResult, ScenarioError> {
    let start = Instant::now();
    let ds = &prepared.dataset;
    let mut pipeline = build_pipeline(kind, cfg, res, ds)?;
    let run = run_pipeline(&mut pipeline, ds, &cfg.edge, &cfg.channel)?;
    let headers: Vec<_> = run.packets.iter().map(|p| p.header()).collect();
    let deliveries = transmit(&headers, &cfg.channel)?;
    let mut graph = KnowledgeGraph::from_seed(&res.seed)?;
    graph.ingest_delivered(&run, &deliveries)?;
    let wall = start.elapsed();
    Ok(PipelineResult {
        kind,
        bytes: byte_totals(&run, &deliveries, &prepared.raw_by_family),
        detection: score_detection(&run.decisions, &prepared.mask),
        latency: latency_summary(&run, &deliveries),
        run,
        deliveries,
        graph,
        wall,
    })
}

/// Runs `kinds` on up to `threads` workers; results keep the order of `kinds`.
pub fn run_many(
    kinds: &[PipelineKind],
    cfg: &ScenarioConfig,
    res: &Resources,
    prepared: &Prepared,
    threads: usize,
) -> Result<Vec<PipelineResult>, ScenarioError> {
    if threads <= 1 || kinds.len() <= 1 {
        return kinds.iter().map(|&k| run_one(k, cfg, res, prepared)).collect();
    }
    let chunk = kinds.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = kinds
            .chunks(chunk)
            .map(|ks| s.spawn(move || ks.iter().map(|&k| run_one(k, cfg, res, prepared)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("pipeline worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub prepared: Prepared,
    pub results: Vec<PipelineResult>,
    pub model: AccountingModel,
    pub accounting: Vec<Accounting>,
}

impl ScenarioRun {
    pub fn get(&self, kind: PipelineKind) -> Option<&PipelineResult> {
        self.results.iter().find(|r| r.kind == kind)
    }
}

/// Coefficients from the config, or calibrated on the centralized run.
pub fn accounting_model(
    cfg: &ScenarioConfig,
    centralized: &RunVolumes,
) -> Result<AccountingModel, AccountingError> {
    match cfg.accounting.model {
        Some(m) => {
            m.validate()?;
            Ok(m)
        }
        None => calibrate(centralized, &cfg.accounting.targets, cfg.accounting.work),
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, ScenarioError> {
    let res = Resources::load(cfg)?;
    let prepared = prepare(cfg)?;
    let results = run_many(&cfg.pipelines, cfg, &res, &prepared, cfg.threads)?;
    let days = prepared.dataset.horizon_days();
    let reference = match results.iter().find(|r| r.kind == PipelineKind::Centralized) {
        Some(r) => r.volumes(days),
        None => run_one(PipelineKind::Centralized, cfg, &res, &prepared)?.volumes(days),
    };
    let model = accounting_model(cfg, &reference)?;
    let accounting = results.iter().map(|r| account(&r.volumes(days), &model)).collect();
    Ok(ScenarioRun {
        prepared,
        results,
        model,
        accounting,
    })
}
