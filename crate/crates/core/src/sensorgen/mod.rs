//! Seeded synthetic multi-sensor dataset.
//!
//! Readings are scattered uniformly at random over distinct
//! `(location, category, step)` cells. Each `(location, category)` stream then
//! draws its values, in step order, from its own substream, so a stream's
//! values depend only on the master seed and the steps it was assigned.

mod csvio;
mod kind;
mod model;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::csvio::{read_csv, write_csv, CsvError};
pub use self::kind::{CategorySet, Family, GenerativeModel, SensorKind, CATEGORY_COUNT};
pub use self::model::{
    diurnal_mean, diurnal_mean_at_hour, expected_value, expected_value_at_hour, ClampRange, Clock,
    DiurnalShape, GeneratorConfig, POISSON_LAMBDA_FLOOR,
};
use crate::anomaly::AnomalyLabel;
use crate::rng::substream;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("observation count must be positive")]
    EmptyCount,
    #[error("at least one sensor category must be enabled")]
    NoCategories,
    #[error("location count must be positive")]
    NoLocations,
    #[error("horizon must contain at least one step")]
    EmptyHorizon,
    #[error("category {0} is listed twice")]
    DuplicateCategory(SensorKind),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("{count} observations do not fit into {cells} distinct cells")]
    TooManyObservations { count: usize, cells: u64 },
}

/// One timestamped, located measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    /// Position in the generated stream.
    pub id: u64,
    pub location: u32,
    pub kind: SensorKind,
    pub t: u64,
    /// `None` encodes a missing-data gap.
    pub value: Option<f64>,
    pub label: Option<AnomalyLabel>,
}

impl SensorReading {
    pub fn stream(&self) -> (u32, SensorKind) {
        (self.location, self.kind)
    }
}

/// Generator parameters for the enabled categories.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CategoryTable {
    slots: [Option<GeneratorConfig>; CATEGORY_COUNT],
}

impl CategoryTable {
    pub fn all_default() -> Self {
        let mut t = CategoryTable::default();
        for k in SensorKind::ALL {
            t.set(k, GeneratorConfig::default_for(k));
        }
        t
    }

    pub fn set(&mut self, kind: SensorKind, cfg: GeneratorConfig) {
        self.slots[kind.index()] = Some(cfg);
    }

    pub fn get(&self, kind: SensorKind) -> Option<&GeneratorConfig> {
        self.slots[kind.index()].as_ref()
    }

    /// Generator for `kind`, falling back to the category default.
    pub fn get_or_default(&self, kind: SensorKind) -> GeneratorConfig {
        self.get(kind).copied().unwrap_or_else(|| GeneratorConfig::default_for(kind))
    }

    pub fn kinds(&self) -> impl Iterator<Item = SensorKind> + '_ {
        SensorKind::ALL.into_iter().filter(|k| self.slots[k.index()].is_some())
    }

    pub fn len(&self) -> usize {
        self.kinds().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub kind: SensorKind,
    pub generator: GeneratorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub count: usize,
    pub locations: u32,
    pub horizon_days: u32,
    pub interval_seconds: u64,
    pub categories: Vec<CategorySpec>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            count: 5_000,
            locations: 100,
            horizon_days: 30,
            interval_seconds: 300,
            categories: SensorKind::ALL
                .into_iter()
                .map(|kind| CategorySpec {
                    kind,
                    generator: GeneratorConfig::default_for(kind),
                })
                .collect(),
        }
    }
}

impl DatasetConfig {
    pub fn clock(&self) -> Clock {
        Clock::new(self.interval_seconds)
    }

    pub fn horizon_steps(&self) -> u64 {
        u64::from(self.horizon_days) * 86_400 / self.interval_seconds.max(1)
    }

    pub fn table(&self) -> Result<CategoryTable, GenError> {
        let mut table = CategoryTable::default();
        for spec in &self.categories {
            if table.get(spec.kind).is_some() {
                return Err(GenError::DuplicateCategory(spec.kind));
            }
            spec.generator
                .validate(spec.kind)
                .map_err(GenError::InvalidGenerator)?;
            table.set(spec.kind, spec.generator);
        }
        Ok(table)
    }
}

/// Nominal serialized size of one reading, per family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ByteSizes {
    pub environmental: u64,
    pub traffic: u64,
    pub cctv_metadata: u64,
    pub infrastructure: u64,
    pub emergency: u64,
}

impl Default for ByteSizes {
    fn default() -> Self {
        Self {
            environmental: 64,
            traffic: 64,
            cctv_metadata: 512,
            infrastructure: 64,
            emergency: 32,
        }
    }
}

impl ByteSizes {
    pub fn of(&self, kind: SensorKind) -> u64 {
        match kind.family() {
            Family::Environmental => self.environmental,
            Family::Traffic => self.traffic,
            Family::CctvMetadata => self.cctv_metadata,
            Family::Infrastructure => self.infrastructure,
            Family::Emergency => self.emergency,
        }
    }
}

/// A generated stream plus the parameters it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub clock: Clock,
    pub horizon_steps: u64,
    pub locations: u32,
    pub generators: CategoryTable,
    pub readings: Vec<SensorReading>,
}

impl Dataset {
    pub fn horizon_days(&self) -> f64 {
        self.horizon_steps as f64 / self.clock.steps_per_day() as f64
    }
}

/// Draws one value for `kind` at step `t` from its family.
pub fn sample_value<R: Rng + ?Sized>(
    kind: SensorKind,
    cfg: &GeneratorConfig,
    clock: &Clock,
    t: u64,
    rng: &mut R,
) -> f64 {
    sample_at_mean(kind, cfg, expected_value(kind, cfg, clock, t), rng)
}

/// Draws one value around a given mean (μ for Gaussian, λ for Poisson, p
/// for Bernoulli categories), clamped to the physical range.
pub fn sample_at_mean<R: Rng + ?Sized>(
    kind: SensorKind,
    cfg: &GeneratorConfig,
    mean: f64,
    rng: &mut R,
) -> f64 {
    let raw = match kind.model() {
        GenerativeModel::GaussianDiurnal | GenerativeModel::GaussianStationary => {
            let noise = Normal::new(0.0, cfg.sigma).expect("sigma validated positive");
            mean + noise.sample(rng)
        }
        GenerativeModel::PoissonDiurnal | GenerativeModel::PoissonConstant => {
            let lambda = mean.max(POISSON_LAMBDA_FLOOR);
            Poisson::new(lambda).expect("lambda is positive").sample(rng)
        }
        GenerativeModel::Bernoulli => {
            if rng.random_bool(mean.clamp(0.0, 1.0)) {
                1.0
            } else {
                0.0
            }
        }
    };
    cfg.clamp.clamp(raw)
}

/// Generates `cfg.count` readings in `(t, location, category)` order.
pub fn generate_dataset(cfg: &DatasetConfig, seed: u64) -> Result<Dataset, GenError> {
    if cfg.count == 0 {
        return Err(GenError::EmptyCount);
    }
    if cfg.categories.is_empty() {
        return Err(GenError::NoCategories);
    }
    if cfg.locations == 0 {
        return Err(GenError::NoLocations);
    }
    let table = cfg.table()?;
    let horizon = cfg.horizon_steps();
    if horizon == 0 {
        return Err(GenError::EmptyHorizon);
    }
    let kinds: Vec<SensorKind> = table.kinds().collect();
    let per_location = kinds.len() as u64 * horizon;
    let cells = per_location * u64::from(cfg.locations);
    if cfg.count as u64 > cells {
        return Err(GenError::TooManyObservations {
            count: cfg.count,
            cells,
        });
    }

    // Cell layout: location-major, then category, then step.
    let mut layout_rng = substream(seed, "layout", 0, 0);
    let picked = rand::seq::index::sample(&mut layout_rng, cells as usize, cfg.count);
    let mut streams: BTreeMap<(u32, SensorKind), Vec<u64>> = BTreeMap::new();
    for cell in picked.iter() {
        let cell = cell as u64;
        let location = (cell / per_location) as u32;
        let rest = cell % per_location;
        let kind = kinds[(rest / horizon) as usize];
        streams.entry((location, kind)).or_default().push(rest % horizon);
    }

    let clock = cfg.clock();
    let mut readings = Vec::with_capacity(cfg.count);
    for ((location, kind), mut steps) in streams {
        steps.sort_unstable();
        let gen = table.get(kind).expect("kind enabled");
        let mut rng = substream(seed, "values", u64::from(location), kind.index() as u64);
        for t in steps {
            readings.push(SensorReading {
                id: 0,
                location,
                kind,
                t,
                value: Some(sample_value(kind, gen, &clock, t, &mut rng)),
                label: None,
            });
        }
    }
    readings.sort_by_key(|r| (r.t, r.location, r.kind));
    for (i, r) in readings.iter_mut().enumerate() {
        r.id = i as u64;
    }

    Ok(Dataset {
        clock,
        horizon_steps: horizon,
        locations: cfg.locations,
        generators: table,
        readings,
    })
}
