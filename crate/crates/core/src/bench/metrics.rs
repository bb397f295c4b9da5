use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::anomaly::AnomalyKind;
use crate::edge::{DecisionRecord, EdgeRun};
use crate::sensorgen::{ByteSizes, Family, SensorReading};
use crate::transport::DeliveryRecord;

/// `Some(anomalous)` per reading; `None` for missing-data points.
pub fn truth_mask(readings: &[SensorReading]) -> Vec<Option<bool>> {
    readings
        .iter()
        .map(|r| match r.label {
            Some(l) if l.kind == AnomalyKind::Missing => None,
            _ if r.value.is_none() => None,
            Some(_) => Some(true),
            None => Some(false),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionScores {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tpr: f64,
    pub fpr: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl DetectionScores {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            tpr: recall,
            fpr: ratio(fp, fp + tn),
        }
    }
}

/// Transmit and escalate count as detections; missing points are skipped.
pub fn score_detection(decisions: &[DecisionRecord], mask: &[Option<bool>]) -> DetectionScores {
    assert_eq!(decisions.len(), mask.len(), "decision log must cover every reading");
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (d, m) in decisions.iter().zip(mask) {
        let Some(anomalous) = *m else { continue };
        match (d.decision.is_positive(), anomalous) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    DetectionScores::from_counts(tp, fp, fn_, tn)
}

/// Raw generated bytes by family.
pub fn raw_bytes_by_family(readings: &[SensorReading], bytes: &ByteSizes) -> BTreeMap<Family, u64> {
    let mut out: BTreeMap<Family, u64> = Family::ALL.iter().map(|f| (*f, 0)).collect();
    for r in readings {
        *out.entry(r.kind.family()).or_default() += bytes.of(r.kind);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ByteTotals {
    pub raw: u64,
    /// Wire bytes handed to the channel.
    pub transmitted: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Raw bytes of the readings in delivered packets.
    pub stored: u64,
    pub delivered_by_family: BTreeMap<Family, u64>,
}

pub fn byte_totals(run: &EdgeRun, deliveries: &[DeliveryRecord], raw_by_family: &BTreeMap<Family, u64>) -> ByteTotals {
    let mut t = ByteTotals {
        raw: raw_by_family.values().sum(),
        delivered_by_family: Family::ALL.iter().map(|f| (*f, 0)).collect(),
        ..ByteTotals::default()
    };
    for (p, d) in run.packets.iter().zip(deliveries) {
        debug_assert_eq!(p.id, d.packet_id);
        t.transmitted += p.wire_bytes;
        if d.delivered_at().is_some() {
            t.delivered += p.wire_bytes;
            t.stored += p.raw_bytes;
            for item in &p.items {
                *t.delivered_by_family.entry(item.reading.kind.family()).or_default() += item.wire_bytes;
            }
        } else {
            t.dropped += p.wire_bytes;
        }
    }
    t
}

/// `1 − delivered / raw`; 0 for an empty run.
pub fn reduction(delivered: u64, raw: u64) -> f64 {
    if raw == 0 {
        0.0
    } else {
        1.0 - delivered as f64 / raw as f64
    }
}

/// Linear-interpolated quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
