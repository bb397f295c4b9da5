use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::InjectionConfig;
use crate::bench::{AccountingModel, CalibrationTargets, WorkWeights};
use crate::edge::{EdgeConfig, PipelineKind};
use crate::rules::{
    ContextWeights, DefaultPolicy, ExternalProvider, ExternalTransport, DEFAULT_HISTORY_DEPTH, DEFAULT_TTL,
};
use crate::sensorgen::{CategorySpec, DatasetConfig, GeneratorConfig, SensorKind};
use crate::transport::ChannelConfig;

/// The scenario file shipped as the documented default.
pub const EXAMPLE_SCENARIO: &str = include_str!("../../assets/scenario.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetBlock {
    /// Read readings from this CSV instead of generating them.
    pub input: Option<PathBuf>,
    pub count: usize,
    pub locations: u32,
    pub horizon_days: u32,
    pub interval_seconds: u64,
    pub categories: Vec<SensorKind>,
    /// Full generator parameters replacing a category's defaults.
    pub generators: BTreeMap<SensorKind, GeneratorConfig>,
}

impl Default for DatasetBlock {
    fn default() -> Self {
        let d = DatasetConfig::default();
        Self {
            input: None,
            count: d.count,
            locations: d.locations,
            horizon_days: d.horizon_days,
            interval_seconds: d.interval_seconds,
            categories: SensorKind::ALL.to_vec(),
            generators: BTreeMap::new(),
        }
    }
}

impl DatasetBlock {
    pub fn to_config(&self) -> DatasetConfig {
        DatasetConfig {
            count: self.count,
            locations: self.locations,
            horizon_days: self.horizon_days,
            interval_seconds: self.interval_seconds,
            categories: self
                .categories
                .iter()
                .map(|&kind| CategorySpec {
                    kind,
                    generator: self
                        .generators
                        .get(&kind)
                        .copied()
                        .unwrap_or_else(|| GeneratorConfig::default_for(kind)),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    Deterministic,
    External {
        name: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(flatten)]
        transport: ExternalTransport,
    },
}

fn default_timeout_ms() -> u64 {
    5_000
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Deterministic
    }
}

impl ProviderConfig {
    pub fn external(&self) -> Option<ExternalProvider> {
        match self {
            ProviderConfig::Deterministic => None,
            ProviderConfig::External {
                name,
                timeout_ms,
                transport,
            } => Some(ExternalProvider {
                name: name.clone(),
                transport: transport.clone(),
                timeout: Duration::from_millis(*timeout_ms),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesBlock {
    pub provider: ProviderConfig,
    pub policy: DefaultPolicy,
    pub weights: ContextWeights,
    pub history_depth: usize,
    pub ttl: u64,
    /// TOML overrides of the physics constraints.
    pub constraints: Option<PathBuf>,
}

impl Default for RulesBlock {
    fn default() -> Self {
        Self {
            provider: ProviderConfig::default(),
            policy: DefaultPolicy::default(),
            weights: ContextWeights::default(),
            history_depth: DEFAULT_HISTORY_DEPTH,
            ttl: DEFAULT_TTL,
            constraints: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccountingBlock {
    /// Line items the centralized run is calibrated to.
    pub targets: CalibrationTargets,
    pub work: WorkWeights,
    /// Fixed coefficients; skips calibration when present.
    pub model: Option<AccountingModel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KgBlock {
    /// Ontology and seed facts; the bundled file when absent.
    pub ontology: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Input sizes; an empty list disables the sweep.
    pub scales: Vec<usize>,
    pub pipelines: Vec<PipelineKind>,
    /// Timed repetitions per point; the fastest is kept.
    pub repeats: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            scales: vec![5_000, 10_000, 20_000, 40_000],
            pipelines: vec![PipelineKind::Centralized, PipelineKind::Adaptive],
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub pipelines: Vec<PipelineKind>,
    /// Worker threads for running pipelines side by side.
    pub threads: usize,
    pub dataset: DatasetBlock,
    pub injection: InjectionConfig,
    pub edge: EdgeConfig,
    /// Rule file for the expert pipeline; the bundled file when absent.
    pub expert_rules: Option<PathBuf>,
    pub rules: RulesBlock,
    pub channel: ChannelConfig,
    pub accounting: AccountingBlock,
    pub kg: KgBlock,
    pub sweep: SweepBlock,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output: PathBuf::from("out"),
            pipelines: PipelineKind::ALL.to_vec(),
            threads: 1,
            dataset: DatasetBlock::default(),
            injection: InjectionConfig::default(),
            edge: EdgeConfig::default(),
            expert_rules: None,
            rules: RulesBlock::default(),
            channel: ChannelConfig::default(),
            accounting: AccountingBlock::default(),
            kg: KgBlock::default(),
            sweep: SweepBlock::default(),
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ScenarioConfig {
    /// Parses `text`; relative paths inside resolve against `base`.
    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            ConfigError::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.dataset.input);
        fix(&mut self.expert_rules);
        fix(&mut self.rules.constraints);
        fix(&mut self.kg.ontology);
        if self.output.is_relative() {
            self.output = base.join(&self.output);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.pipelines.is_empty() {
            return bad("pipelines must name at least one pipeline".into());
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.dataset.input.is_none() {
            self.dataset
                .to_config()
                .table()
                .map_err(|e| ConfigError::Invalid(format!("dataset: {e}")))?;
            self.injection
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("injection: {e}")))?;
        }
        self.channel
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("channel: {e}")))?;
        self.rules
            .weights
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("rules.weights: {e}")))?;
        if self.rules.history_depth == 0 {
            return bad("rules.history_depth must be at least 1".into());
        }
        if let Some(m) = &self.accounting.model {
            m.validate().map_err(|e| ConfigError::Invalid(format!("accounting.model: {e}")))?;
        }
        if let Some(bad_scale) = self.sweep.scales.windows(2).find(|w| w[0] >= w[1]) {
            return bad(format!("sweep.scales must increase, found {} then {}", bad_scale[0], bad_scale[1]));
        }
        if let ProviderConfig::External { transport, .. } = &self.rules.provider {
            check_provider(transport)?;
        }
        Ok(())
    }

    /// Creates the output directory and checks it accepts files.
    pub fn prepare_output(&self) -> Result<(), ConfigError> {
        let io = |source| ConfigError::Io {
            path: self.output.clone(),
            source,
        };
        std::fs::create_dir_all(&self.output).map_err(io)?;
        let probe = self.output.join(".write-check");
        std::fs::write(&probe, b"").map_err(io)?;
        std::fs::remove_file(&probe).map_err(io)
    }
}

fn check_provider(t: &ExternalTransport) -> Result<(), ConfigError> {
    match t {
        ExternalTransport::Subprocess { command, .. } => {
            let found = if command.contains(std::path::MAIN_SEPARATOR) {
                Path::new(command).is_file()
            } else {
                std::env::var_os("PATH")
                    .is_some_and(|paths| std::env::split_paths(&paths).any(|d| d.join(command).is_file()))
            };
            if found {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("rule provider command `{command}` not found")))
            }
        }
        ExternalTransport::Http { url } => {
            if url.starts_with("http://") || url.starts_with("https://") {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("rule provider url `{url}` is not http(s)")))
            }
        }
    }
}
