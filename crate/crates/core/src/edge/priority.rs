use serde::{Deserialize, Serialize};

use crate::sensorgen::{SensorKind, CATEGORY_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityWeights {
    pub anomaly: f64,
    pub temporal: f64,
    pub spatial: f64,
    pub semantic: f64,
}

impl Default for PriorityWeights {
    fn default() -> Self {
        Self {
            anomaly: 0.4,
            temporal: 0.3,
            spatial: 0.2,
            semantic: 0.1,
        }
    }
}

impl PriorityWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.anomaly, self.temporal, self.spatial, self.semantic]
    }

    pub fn from_array(w: [f64; 4]) -> Self {
        Self {
            anomaly: w[0],
            temporal: w[1],
            spatial: w[2],
            semantic: w[3],
        }
    }

    /// Scales the weights to sum to 1.
    pub fn normalized(&self) -> Result<Self, String> {
        let w = self.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(format!("priority weights must be finite and nonnegative: {w:?}"));
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err("priority weights must not all be zero".into());
        }
        Ok(Self::from_array(w.map(|x| x / sum)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityScore {
    pub i_anomaly: f64,
    pub i_temporal: f64,
    pub i_spatial: f64,
    pub i_semantic: f64,
    pub score: f64,
}

impl PriorityScore {
    pub fn from_indicators(ind: [f64; 4], w: &PriorityWeights) -> Self {
        let w = w.as_array();
        Self {
            i_anomaly: ind[0],
            i_temporal: ind[1],
            i_spatial: ind[2],
            i_semantic: ind[3],
            score: w[0] * ind[0] + w[1] * ind[1] + w[2] * ind[2] + w[3] * ind[3],
        }
    }

    pub fn indicators(&self) -> [f64; 4] {
        [self.i_anomaly, self.i_temporal, self.i_spatial, self.i_semantic]
    }
}

/// What the scorer needs to know about one batch member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchItem {
    pub location: u32,
    pub kind: SensorKind,
    /// Step of the oldest underlying reading.
    pub t: u64,
    pub flagged: bool,
}

/// Recency time constant in steps.
pub const DEFAULT_TAU: f64 = 6.0;

/// Scores a non-empty batch closed at step `now`.
///
/// `step_locations` is the number of distinct locations reporting at `now`.
pub fn score_priority(
    batch: &[BatchItem],
    now: u64,
    step_locations: usize,
    tau: f64,
    w: &PriorityWeights,
) -> PriorityScore {
    assert!(!batch.is_empty(), "priority of an empty batch");
    let n = batch.len() as f64;
    let anomaly = batch.iter().filter(|b| b.flagged).count() as f64 / n;
    let oldest = batch.iter().map(|b| b.t).min().unwrap_or(now);
    let temporal = (-(now.saturating_sub(oldest) as f64) / tau).exp();
    let mut locs: Vec<u32> = batch.iter().map(|b| b.location).collect();
    locs.sort_unstable();
    locs.dedup();
    let spatial = (locs.len() as f64 / step_locations.max(locs.len()) as f64).min(1.0);
    let mut kinds: Vec<usize> = batch.iter().map(|b| b.kind.index()).collect();
    kinds.sort_unstable();
    kinds.dedup();
    let semantic = kinds.len() as f64 / CATEGORY_COUNT as f64;
    PriorityScore::from_indicators([anomaly, temporal, spatial, semantic], w)
}
