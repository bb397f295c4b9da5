use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::rules::Features;
use crate::sensorgen::{expected_value, CategoryTable, Clock, SensorKind, SensorReading, CATEGORY_COUNT};

/// Mean and standard deviation over the last `cap` values.
#[derive(Debug, Clone)]
pub struct RollingStats {
    values: VecDeque<f64>,
    cap: usize,
}

impl RollingStats {
    pub fn new(cap: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(cap),
            cap,
        }
    }

    pub fn push(&mut self, v: f64) {
        if self.values.len() == self.cap {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation; 0 with fewer than two values.
    pub fn std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    /// `|v − mean| / std`, with a zero spread mapping equal values to 0 and
    /// anything else to infinity.
    pub fn zscore(&self, v: f64) -> f64 {
        let d = (v - self.mean()).abs();
        let s = self.std();
        if s > 0.0 {
            d / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Residuals kept per category.
    pub window: usize,
    /// Residuals needed before the rolling correction applies.
    pub warmup: usize,
    /// Readings above this zscore do not update the baseline.
    pub outlier_z: f64,
    /// Lower bound on the rolling residual spread.
    pub min_spread: f64,
    /// A co-located reading counts toward `cross` above this zscore.
    pub cross_z: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            window: 64,
            warmup: 8,
            outlier_z: 3.0,
            min_spread: 0.5,
            cross_z: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LastSeen {
    t: u64,
    value: Option<f64>,
}

/// Derives rule features from readings, one step at a time.
///
/// The zscore is a standardized residual against the generator's expected
/// profile, re-centred and re-scaled by a per-category rolling window over
/// the fleet.
pub struct FeatureTracker<'a> {
    gens: &'a CategoryTable,
    clock: Clock,
    cfg: BaselineConfig,
    residuals: Vec<RollingStats>,
    last: HashMap<(u32, SensorKind), LastSeen>,
}

impl<'a> FeatureTracker<'a> {
    pub fn new(gens: &'a CategoryTable, clock: Clock, cfg: BaselineConfig) -> Self {
        Self {
            gens,
            clock,
            cfg,
            residuals: (0..CATEGORY_COUNT).map(|_| RollingStats::new(cfg.window)).collect(),
            last: HashMap::new(),
        }
    }

    /// `(value − expected) / noise scale` under the nominal profile.
    pub fn residual(&self, kind: SensorKind, t: u64, v: f64) -> f64 {
        let g = self.gens.get_or_default(kind);
        let mean = expected_value(kind, &g, &self.clock, t);
        (v - mean) / g.noise_scale(kind, mean).max(f64::EPSILON)
    }

    fn signed_z(&self, kind: SensorKind, r: f64) -> f64 {
        let base = &self.residuals[kind.index()];
        if base.len() < self.cfg.warmup {
            return r;
        }
        (r - base.mean()) / base.std().max(self.cfg.min_spread)
    }

    /// Features and signed zscores for every reading of one step, in input
    /// order. Updates state.
    pub fn step(&mut self, readings: &[&SensorReading]) -> (Vec<Features>, Vec<Option<f64>>) {
        let signed: Vec<Option<f64>> = readings
            .iter()
            .map(|r| r.value.map(|v| self.signed_z(r.kind, self.residual(r.kind, r.t, v))))
            .collect();
        let mut out = Vec::with_capacity(readings.len());
        for (i, r) in readings.iter().enumerate() {
            let z = signed[i].map(f64::abs);
            let cross = readings
                .iter()
                .zip(&signed)
                .enumerate()
                .filter(|(j, (o, oz))| {
                    *j != i && o.location == r.location && oz.is_some_and(|z| z.abs() > self.cfg.cross_z)
                })
                .count() as u32;
            let prev = self.last.get(&r.stream()).copied();
            let gap = prev.is_some_and(|p| p.value.is_none());
            let rate = match (prev, r.value) {
                (Some(LastSeen { t, value: Some(pv) }), Some(v)) if r.t > t => Some((v - pv) / (r.t - t) as f64),
                _ => None,
            };
            out.push(Features {
                kind: r.kind,
                location: r.location,
                value: r.value,
                zscore: z,
                rate,
                hour: self.clock.hour(r.t),
                gap,
                cross,
            });
        }
        for (r, z) in readings.iter().zip(&signed) {
            if let (Some(v), Some(z)) = (r.value, z) {
                if z.abs() <= self.cfg.outlier_z {
                    let res = self.residual(r.kind, r.t, v);
                    self.residuals[r.kind.index()].push(res);
                }
            }
            self.last.insert(r.stream(), LastSeen { t: r.t, value: r.value });
        }
        (out, signed)
    }

    /// Values held: rolling residuals plus per-stream last readings.
    pub fn state_size(&self) -> usize {
        self.residuals.iter().map(RollingStats::len).sum::<usize>() + self.last.len()
    }
}
