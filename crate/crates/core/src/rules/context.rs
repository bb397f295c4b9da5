use serde::{Deserialize, Serialize};

use super::constraints::PhysicsConstraints;
use super::RuleError;
use crate::rng::fnv1a_bytes;
use crate::sensorgen::{Family, SensorKind, CATEGORY_COUNT};

/// Length of every context component.
pub const CONTEXT_DIM: usize = 16;

/// Slot of `h` holding the short-history flag.
pub const SHORT_HISTORY_SLOT: usize = CONTEXT_DIM - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for ContextWeights {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            beta: 0.2,
            gamma: 0.3,
            delta: 0.1,
        }
    }
}

impl ContextWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.as_array().iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("context weights must be finite and nonnegative: {self:?}"));
        }
        Ok(())
    }
}

/// One recent reading as the context builder sees it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredObservation {
    pub kind: SensorKind,
    pub location: u32,
    pub t: u64,
    pub value: Option<f64>,
    /// Signed standardized residual; `None` for missing values.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    /// Latest z-score per category.
    pub s: Vec<f64>,
    /// `[mean environmental z, missing fraction, 0, ...]`.
    pub e: Vec<f64>,
    /// `[slope, variance]` per family over the last k steps; last slot flags
    /// a window shorter than k.
    pub h: Vec<f64>,
    /// Required-transmit indicator per category.
    pub p: Vec<f64>,
    pub combined: Vec<f64>,
}

impl ContextVector {
    pub fn from_parts(
        s: Vec<f64>,
        e: Vec<f64>,
        h: Vec<f64>,
        p: Vec<f64>,
        w: &ContextWeights,
    ) -> Self {
        let combined = combine(&s, &e, &h, &p, w);
        Self { s, e, h, p, combined }
    }

    pub fn short_history(&self) -> bool {
        self.h.get(SHORT_HISTORY_SLOT).is_some_and(|&f| f != 0.0)
    }

    /// `max |combined_i|`.
    pub fn pressure(&self) -> f64 {
        self.combined.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        [&self.s, &self.e, &self.h, &self.p, &self.combined]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn family_variance(&self, f: Family) -> f64 {
        self.h[2 * f.index() + 1]
    }

    /// Hash of the combined vector's bit patterns, hex encoded.
    pub fn snapshot_hash(&self) -> String {
        let bytes: Vec<u8> = self.combined.iter().flat_map(|x| x.to_bits().to_le_bytes()).collect();
        format!("{:016x}", fnv1a_bytes(&bytes))
    }
}

/// `α·s + β·e + γ·h + δ·p`, componentwise.
pub fn combine(s: &[f64], e: &[f64], h: &[f64], p: &[f64], w: &ContextWeights) -> Vec<f64> {
    assert!(
        s.len() == e.len() && e.len() == h.len() && h.len() == p.len(),
        "context components must share one dimension"
    );
    (0..s.len())
        .map(|i| w.alpha * s[i] + w.beta * e[i] + w.gamma * h[i] + w.delta * p[i])
        .collect()
}

fn slope_and_variance(points: &[(f64, f64)]) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var = points.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n;
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, var)
}

/// Summarizes a recent window into a context vector.
///
/// `window` is assumed time-ordered; ties keep their order, so the last
/// observation of a category wins.
pub fn build_context(
    window: &[ScoredObservation],
    policy: &PhysicsConstraints,
    w: &ContextWeights,
    k: usize,
) -> Result<ContextVector, RuleError> {
    if window.is_empty() {
        return Err(RuleError::EmptyWindow);
    }
    if k == 0 {
        return Err(RuleError::ZeroHistoryDepth);
    }

    let mut s = vec![0.0; CONTEXT_DIM];
    let mut latest: [Option<u64>; CATEGORY_COUNT] = [None; CATEGORY_COUNT];
    for o in window {
        if let Some(z) = o.z {
            let i = o.kind.index();
            if latest[i].is_none_or(|t| o.t >= t) {
                latest[i] = Some(o.t);
                s[i] = z;
            }
        }
    }

    let mut e = vec![0.0; CONTEXT_DIM];
    let env: Vec<f64> = window
        .iter()
        .filter(|o| o.kind.family() == Family::Environmental)
        .filter_map(|o| o.z)
        .collect();
    if !env.is_empty() {
        e[0] = env.iter().sum::<f64>() / env.len() as f64;
    }
    e[1] = window.iter().filter(|o| o.value.is_none()).count() as f64 / window.len() as f64;

    let mut steps: Vec<u64> = window.iter().map(|o| o.t).collect();
    steps.sort_unstable();
    steps.dedup();
    let short = steps.len() < k;
    let first = steps[steps.len().saturating_sub(k)];
    let mut h = vec![0.0; CONTEXT_DIM];
    for f in Family::ALL {
        let pts: Vec<(f64, f64)> = window
            .iter()
            .filter(|o| o.t >= first && o.kind.family() == f)
            .filter_map(|o| o.z.map(|z| (o.t as f64, z)))
            .collect();
        let (slope, var) = slope_and_variance(&pts);
        h[2 * f.index()] = slope;
        h[2 * f.index() + 1] = var;
    }
    h[SHORT_HISTORY_SLOT] = if short { 1.0 } else { 0.0 };

    let mut p = vec![0.0; CONTEXT_DIM];
    for kind in SensorKind::ALL {
        if policy.get(kind).required_transmit {
            p[kind.index()] = 1.0;
        }
    }

    Ok(ContextVector::from_parts(s, e, h, p, w))
}
