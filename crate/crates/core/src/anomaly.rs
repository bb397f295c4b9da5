//! Labeled anomaly and missing-data injection.
//!
//! Spans are placed on `(location, category)` streams (readings ordered by
//! step) and never overlap within a stream. Binary categories only receive
//! missing-data gaps; value anomalies need a noise scale to deviate from.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{substream, SimRng};
use crate::sensorgen::{
    expected_value, expected_value_at_hour, sample_at_mean, CategoryTable, Clock, GeneratorConfig,
    SensorKind, SensorReading,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Point,
    Contextual,
    Collective,
    Missing,
    CrossSensor,
}

impl AnomalyKind {
    pub fn name(self) -> &'static str {
        match self {
            AnomalyKind::Point => "point",
            AnomalyKind::Contextual => "contextual",
            AnomalyKind::Collective => "collective",
            AnomalyKind::Missing => "missing",
            AnomalyKind::CrossSensor => "cross",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "point" => AnomalyKind::Point,
            "contextual" => AnomalyKind::Contextual,
            "collective" => AnomalyKind::Collective,
            "missing" => AnomalyKind::Missing,
            "cross" | "cross_sensor" => AnomalyKind::CrossSensor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnomalyLabel {
    pub kind: AnomalyKind,
    /// Shared by all members of one injected event.
    pub group: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnomalyMix {
    pub point: f64,
    pub contextual: f64,
    pub collective: f64,
    pub cross_sensor: f64,
}

impl Default for AnomalyMix {
    fn default() -> Self {
        Self {
            point: 0.25,
            contextual: 0.25,
            collective: 0.25,
            cross_sensor: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionConfig {
    /// Fraction of readings labeled anomalous (missing gaps excluded).
    pub rate: f64,
    /// Fraction of readings nulled out as missing-data gaps.
    pub missing_rate: f64,
    /// Point-anomaly σ multiplier range.
    pub k_range: [f64; 2],
    /// Inclusive range of span lengths for gaps and collective anomalies.
    pub gap_range: [u32; 2],
    pub mix: AnomalyMix,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            rate: 0.02,
            missing_rate: 0.005,
            k_range: [5.0, 10.0],
            gap_range: [1, 10],
            mix: AnomalyMix::default(),
        }
    }
}

/// Deviation used for bursts and cross-sensor perturbations, in σ.
pub const BURST_SIGMA: f64 = 3.0;
/// Minimum |μ_source − μ_target| for a contextual shift, in σ.
pub const CONTEXTUAL_MIN_SHIFT: f64 = 2.0;

impl InjectionConfig {
    pub fn validate(&self) -> Result<(), InjectError> {
        let bad = |m: String| Err(InjectError::InvalidConfig(m));
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return bad(format!("rate must be in (0,1), got {}", self.rate));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad(format!("missing_rate must be in [0,1), got {}", self.missing_rate));
        }
        let [k_lo, k_hi] = self.k_range;
        if !(k_lo > 0.0 && k_lo <= k_hi && k_hi.is_finite()) {
            return bad(format!("invalid k_range [{k_lo}, {k_hi}]"));
        }
        let [g_lo, g_hi] = self.gap_range;
        if g_lo == 0 || g_lo > g_hi {
            return bad(format!("invalid gap_range [{g_lo}, {g_hi}]"));
        }
        let m = &self.mix;
        let parts = [m.point, m.contextual, m.collective, m.cross_sensor];
        if parts.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return bad("mix proportions must be nonnegative".into());
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("mix proportions sum to {sum}, expected 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InjectError {
    #[error("invalid injection config: {0}")]
    InvalidConfig(String),
    #[error("required anomaly mass {required} exceeds available non-overlapping capacity {available}")]
    Capacity { required: usize, available: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    /// `round(rate · n)`.
    pub target: usize,
    /// Readings labeled with a non-missing anomaly kind.
    pub labeled: usize,
    pub by_kind: BTreeMap<AnomalyKind, usize>,
    pub missing_points: usize,
    pub gap_lengths: Vec<u32>,
    pub collective_lengths: Vec<u32>,
    /// Pre-clamp |value − μ(t)| / σ of each point anomaly.
    pub point_deviations: Vec<f64>,
    /// Readings that could not be placed as their planned kind and were
    /// injected as point anomalies instead.
    pub reassigned_to_point: usize,
    pub groups: u64,
}

struct Injector<'a> {
    readings: Vec<SensorReading>,
    gens: &'a CategoryTable,
    clock: &'a Clock,
    cfg: &'a InjectionConfig,
    rng: SimRng,
    streams: Vec<Vec<usize>>,
    occupied: Vec<bool>,
    next_group: u64,
    report: InjectionReport,
}

/// Injects labeled anomalies and gaps; deterministic in `seed`.
pub fn inject(
    readings: Vec<SensorReading>,
    cfg: &InjectionConfig,
    gens: &CategoryTable,
    clock: &Clock,
    seed: u64,
) -> Result<(Vec<SensorReading>, InjectionReport), InjectError> {
    cfg.validate()?;
    let n = readings.len();
    let target = (cfg.rate * n as f64).round() as usize;
    let missing_target = (cfg.missing_rate * n as f64).round() as usize;

    let mut by_stream: BTreeMap<(u32, SensorKind), Vec<usize>> = BTreeMap::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (readings[i].t, readings[i].id));
    for i in order {
        by_stream.entry(readings[i].stream()).or_default().push(i);
    }

    let mut inj = Injector {
        gens,
        clock,
        cfg,
        rng: substream(seed, "inject", 0, 0),
        streams: by_stream.into_values().collect(),
        occupied: readings.iter().map(|r| r.label.is_some()).collect(),
        next_group: 1,
        report: InjectionReport {
            target,
            ..Default::default()
        },
        readings,
    };

    let available = (0..n).filter(|&i| inj.eligible(i)).count();
    if target > available || target + missing_target > n {
        return Err(InjectError::Capacity {
            required: target + missing_target,
            available: available.min(n.saturating_sub(missing_target)),
        });
    }

    let m = cfg.mix;
    let quotas = apportion(target, &[m.point, m.contextual, m.collective, m.cross_sensor]);
    let mut shortfall = inj.collective(quotas[2]);
    shortfall += inj.cross_sensor(quotas[3]);
    shortfall += inj.contextual(quotas[1]);
    inj.report.reassigned_to_point = shortfall;
    let placed = inj.point(quotas[0] + shortfall);
    if placed < quotas[0] + shortfall {
        return Err(InjectError::Capacity {
            required: target,
            available: target - (quotas[0] + shortfall - placed),
        });
    }
    inj.gaps(missing_target);

    inj.report.groups = inj.next_group - 1;
    inj.report.labeled = inj.report.by_kind.iter()
        .filter(|(k, _)| **k != AnomalyKind::Missing)
        .map(|(_, c)| c)
        .sum();
    Ok((inj.readings, inj.report))
}

/// Largest-remainder split of `total` by `weights`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = total - out.iter().sum::<usize>();
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in idx {
        if rest == 0 {
            break;
        }
        out[i] += 1;
        rest -= 1;
    }
    out
}

impl Injector<'_> {
    fn eligible(&self, i: usize) -> bool {
        let r = &self.readings[i];
        !self.occupied[i] && r.value.is_some() && !r.kind.is_binary()
    }

    fn gen(&self, kind: SensorKind) -> GeneratorConfig {
        self.gens.get_or_default(kind)
    }

    fn label(&mut self, i: usize, kind: AnomalyKind, group: u64) {
        self.occupied[i] = true;
        self.readings[i].label = Some(AnomalyLabel { kind, group });
        *self.report.by_kind.entry(kind).or_default() += 1;
    }

    fn new_group(&mut self) -> u64 {
        let g = self.next_group;
        self.next_group += 1;
        g
    }

    fn span_len(&mut self) -> usize {
        let [lo, hi] = self.cfg.gap_range;
        self.rng.random_range(lo..=hi) as usize
    }

    /// Finds `len` consecutive free stream positions.
    fn find_run(&mut self, len: usize, anomaly: bool) -> Option<Vec<usize>> {
        let candidates: Vec<usize> = (0..self.streams.len())
            .filter(|&s| self.streams[s].len() >= len)
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let free = |inj: &Self, i: usize| {
            if anomaly {
                inj.eligible(i)
            } else {
                !inj.occupied[i]
            }
        };
        for _ in 0..64 {
            let s = candidates[self.rng.random_range(0..candidates.len())];
            let stream = &self.streams[s];
            let start = self.rng.random_range(0..=stream.len() - len);
            let run = &stream[start..start + len];
            if run.iter().all(|&i| free(self, i)) {
                return Some(run.to_vec());
            }
        }
        let offset = self.rng.random_range(0..candidates.len());
        for c in 0..candidates.len() {
            let stream = &self.streams[candidates[(offset + c) % candidates.len()]];
            let mut streak = 0;
            for (pos, &i) in stream.iter().enumerate() {
                streak = if free(self, i) { streak + 1 } else { 0 };
                if streak == len {
                    return Some(stream[pos + 1 - len..=pos].to_vec());
                }
            }
        }
        None
    }

    /// Shifts reading `i` by `magnitude` (in value units) away from its local
    /// mean, flipping the sign when clamping would erase the deviation.
    /// Returns the pre-clamp deviation from the mean.
    fn displace(&mut self, i: usize, magnitude: f64, sign: f64) -> f64 {
        let r = &self.readings[i];
        let gen = self.gen(r.kind);
        let mu = expected_value(r.kind, &gen, self.clock, r.t);
        let v = r.value.expect("eligible readings have values");
        let eps = v - mu;
        let discrete = r.kind.is_discrete();
        let shifted = |s: f64| {
            // Measured from μ, the deviation is always at least `magnitude`.
            let pre = v + s * (magnitude + (-s * eps).max(0.0));
            let pre = if discrete {
                if pre >= mu { pre.ceil() } else { pre.floor() }
            } else {
                pre
            };
            (pre, gen.clamp.clamp(pre))
        };
        let (pre_a, post_a) = shifted(sign);
        let (pre, post) = if (post_a - mu).abs() < magnitude {
            let (pre_b, post_b) = shifted(-sign);
            if (post_b - mu).abs() > (post_a - mu).abs() {
                (pre_b, post_b)
            } else {
                (pre_a, post_a)
            }
        } else {
            (pre_a, post_a)
        };
        self.readings[i].value = Some(post);
        (pre - mu).abs()
    }

    fn random_sign(&mut self) -> f64 {
        if self.rng.random_bool(0.5) { 1.0 } else { -1.0 }
    }

    fn collective(&mut self, quota: usize) -> usize {
        let mut remaining = quota;
        while remaining >= 2 {
            let mut len = self.span_len().clamp(2, remaining);
            let run = loop {
                if let Some(run) = self.find_run(len, true) {
                    break Some(run);
                }
                if len <= 2 {
                    break None;
                }
                len -= 1;
            };
            let Some(run) = run else { break };
            let group = self.new_group();
            if self.rng.random_bool(0.5) {
                // Flatline: the stream sticks at its first value.
                let stuck = self.readings[run[0]].value;
                for &i in &run {
                    self.readings[i].value = stuck;
                }
            } else {
                // Burst: alternate ±3σ around the local mean.
                let mut sign = self.random_sign();
                for &i in &run {
                    let r = &self.readings[i];
                    let gen = self.gen(r.kind);
                    let mu = expected_value(r.kind, &gen, self.clock, r.t);
                    let mut v = mu + sign * BURST_SIGMA * gen.sigma;
                    if r.kind.is_discrete() {
                        v = if sign > 0.0 { v.ceil() } else { v.floor() };
                    }
                    self.readings[i].value = Some(gen.clamp.clamp(v));
                    sign = -sign;
                }
            }
            for &i in &run {
                self.label(i, AnomalyKind::Collective, group);
            }
            self.report.collective_lengths.push(run.len() as u32);
            remaining -= run.len();
        }
        remaining
    }

    fn cross_sensor(&mut self, quota: usize) -> usize {
        let mut cells: BTreeMap<(u32, u64), Vec<usize>> = BTreeMap::new();
        for i in 0..self.readings.len() {
            if self.eligible(i) {
                let r = &self.readings[i];
                cells.entry((r.location, r.t)).or_default().push(i);
            }
        }
        let mut groups: Vec<Vec<usize>> = cells.into_values().filter(|m| m.len() >= 2).collect();
        groups.shuffle(&mut self.rng);
        let mut remaining = quota;
        for members in groups {
            if remaining < 2 {
                break;
            }
            let take = members.len().min(remaining);
            let group = self.new_group();
            let sign = self.random_sign();
            for &i in &members[..take] {
                let sigma = self.gen(self.readings[i].kind).sigma;
                self.displace(i, BURST_SIGMA * sigma, sign);
                self.label(i, AnomalyKind::CrossSensor, group);
            }
            remaining -= take;
        }
        remaining
    }

    fn contextual(&mut self, quota: usize) -> usize {
        let mut candidates: Vec<usize> = (0..self.readings.len())
            .filter(|&i| {
                let k = self.readings[i].kind;
                self.eligible(i) && k.model().is_diurnal() && self.gen(k).amplitude > 0.0
            })
            .collect();
        candidates.shuffle(&mut self.rng);
        let mut remaining = quota;
        for i in candidates {
            if remaining == 0 {
                break;
            }
            let r = &self.readings[i];
            let (kind, t) = (r.kind, r.t);
            let gen = self.gen(kind);
            let hour = self.clock.hour(t);
            let mu = expected_value_at_hour(kind, &gen, hour);
            let frac = hour.fract();
            let targets: Vec<f64> = (0..24)
                .map(|h| h as f64 + frac)
                .filter(|&h| {
                    (expected_value_at_hour(kind, &gen, h) - mu).abs()
                        >= CONTEXTUAL_MIN_SHIFT * gen.sigma
                })
                .collect();
            if targets.is_empty() {
                continue;
            }
            let h = targets[self.rng.random_range(0..targets.len())];
            let shifted_mean = expected_value_at_hour(kind, &gen, h);
            let v = sample_at_mean(kind, &gen, shifted_mean, &mut self.rng);
            self.readings[i].value = Some(v);
            let group = self.new_group();
            self.label(i, AnomalyKind::Contextual, group);
            remaining -= 1;
        }
        remaining
    }

    fn point(&mut self, quota: usize) -> usize {
        let mut candidates: Vec<usize> =
            (0..self.readings.len()).filter(|&i| self.eligible(i)).collect();
        candidates.shuffle(&mut self.rng);
        let [k_lo, k_hi] = self.cfg.k_range;
        let mut placed = 0;
        for i in candidates.into_iter().take(quota) {
            let k = if k_lo == k_hi { k_lo } else { self.rng.random_range(k_lo..=k_hi) };
            let sign = self.random_sign();
            let sigma = self.gen(self.readings[i].kind).sigma;
            let dev = self.displace(i, k * sigma, sign);
            self.report.point_deviations.push(dev / sigma);
            let group = self.new_group();
            self.label(i, AnomalyKind::Point, group);
            placed += 1;
        }
        placed
    }

    fn gaps(&mut self, quota: usize) {
        let mut remaining = quota;
        while remaining > 0 {
            let mut len = self.span_len().min(remaining);
            let run = loop {
                if let Some(run) = self.find_run(len, false) {
                    break Some(run);
                }
                if len <= 1 {
                    break None;
                }
                len -= 1;
            };
            let Some(run) = run else { break };
            let group = self.new_group();
            for &i in &run {
                self.readings[i].value = None;
                self.label(i, AnomalyKind::Missing, group);
            }
            self.report.missing_points += run.len();
            self.report.gap_lengths.push(run.len() as u32);
            remaining -= run.len();
        }
    }
}

/// `mask[i]` is true iff reading `i` carries a non-missing anomaly label.
pub fn ground_truth(readings: &[SensorReading]) -> Vec<bool> {
    readings
        .iter()
        .map(|r| matches!(r.label, Some(l) if l.kind != AnomalyKind::Missing))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensorgen::{generate_dataset, DatasetConfig};

    fn dataset() -> (Vec<SensorReading>, CategoryTable, Clock) {
        let ds = generate_dataset(&DatasetConfig::default(), 42).unwrap();
        (ds.readings, ds.generators, ds.clock)
    }

    #[test]
    fn point_arithmetic() {
        let mut gens = CategoryTable::default();
        let mut g = GeneratorConfig::default_for(SensorKind::Temperature);
        g.mu_base = 20.0;
        g.amplitude = 0.0;
        g.sigma = 2.0;
        gens.set(SensorKind::Temperature, g);
        let clock = Clock::default();
        let readings = vec![SensorReading {
            id: 0,
            location: 0,
            kind: SensorKind::Temperature,
            t: 0,
            value: Some(20.0),
            label: None,
        }];
        let cfg = InjectionConfig::default();
        let mut inj = Injector {
            readings,
            gens: &gens,
            clock: &clock,
            cfg: &cfg,
            rng: substream(1, "t", 0, 0),
            streams: vec![vec![0]],
            occupied: vec![false],
            next_group: 1,
            report: InjectionReport::default(),
        };
        let dev = inj.displace(0, 5.0 * 2.0, 1.0);
        assert_eq!(inj.readings[0].value, Some(30.0));
        assert_eq!(dev, 10.0);
    }

    #[test]
    fn default_run_hits_rate() {
        let (readings, gens, clock) = dataset();
        let (out, rep) = inject(readings, &InjectionConfig::default(), &gens, &clock, 42).unwrap();
        assert_eq!(rep.target, 100);
        assert_eq!(rep.labeled, 100);
        let mask = ground_truth(&out);
        assert_eq!(mask.iter().filter(|m| **m).count(), rep.labeled);
        assert_eq!(rep.missing_points, 25);
        for r in &out {
            let is_missing = matches!(r.label, Some(l) if l.kind == AnomalyKind::Missing);
            assert_eq!(is_missing, r.value.is_none());
        }
    }

    #[test]
    fn zero_injection_means_all_false_mask() {
        let (readings, _, _) = dataset();
        assert!(ground_truth(&readings).iter().all(|m| !m));
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(100, &[0.25; 4]), vec![25, 25, 25, 25]);
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]).iter().sum::<usize>(), 10);
        assert_eq!(apportion(7, &[0.5, 0.5, 0.0, 0.0]), vec![4, 3, 0, 0]);
    }

    #[test]
    fn invalid_configs() {
        let mut c = InjectionConfig::default();
        c.rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = InjectionConfig::default();
        c.mix.point = 0.5;
        assert!(c.validate().is_err());
        let mut c = InjectionConfig::default();
        c.gap_range = [0, 3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn capacity_exceeded() {
        let (readings, gens, clock) = dataset();
        let readings: Vec<SensorReading> = readings.into_iter()
            .filter(|r| r.kind.is_binary())
            .collect();
        let err = inject(readings, &InjectionConfig::default(), &gens, &clock, 1).unwrap_err();
        assert!(matches!(err, InjectError::Capacity { .. }));
    }
}
