use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::metrics::reduction;
use crate::edge::PipelineKind;
use crate::scenario::{prepare, run_one, Resources, ScenarioConfig, ScenarioError};

/// One point of the scalability table. Only `runtime_s` and `throughput`
/// depend on the machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pipeline: PipelineKind,
    pub readings: usize,
    pub runtime_s: f64,
    /// Readings per second.
    pub throughput: f64,
    pub latency_p50: f64,
    pub latency_p95: f64,
    pub peak_state: usize,
    pub delivered_bytes: u64,
    pub reduction: f64,
}

/// Times generation, filtering, transport and ingestion at each scale and
/// keeps the fastest of `repeats` runs. Repeats sweep the whole grid in turn
/// so that a transient slowdown lands on every scale rather than one.
pub fn sweep_scalability(
    scales: &[usize],
    pipelines: &[PipelineKind],
    base: &ScenarioConfig,
    repeats: usize,
) -> Result<Vec<SweepRow>, ScenarioError> {
    let res = Resources::load(base)?;
    let grid: Vec<(PipelineKind, usize)> =
        pipelines.iter().flat_map(|&k| scales.iter().map(move |&n| (k, n))).collect();
    let mut best: Vec<Option<(Duration, SweepRow)>> = vec![None; grid.len()];
    for _ in 0..repeats.max(1) {
        for (&(kind, n), slot) in grid.iter().zip(best.iter_mut()) {
            let mut cfg = base.clone();
            cfg.dataset.count = n;
            cfg.dataset.input = None;
            let start = Instant::now();
            let prepared = prepare(&cfg)?;
            let r = run_one(kind, &cfg, &res, &prepared)?;
            let elapsed = start.elapsed();
            if slot.as_ref().is_some_and(|(b, _)| *b <= elapsed) {
                continue;
            }
            let secs = elapsed.as_secs_f64();
            let row = SweepRow {
                pipeline: kind,
                readings: prepared.dataset.readings.len(),
                runtime_s: secs,
                throughput: if secs > 0.0 { n as f64 / secs } else { 0.0 },
                latency_p50: r.latency.p50,
                latency_p95: r.latency.p95,
                peak_state: r.run.peak_state,
                delivered_bytes: r.bytes.delivered,
                reduction: reduction(r.bytes.delivered, r.bytes.raw),
            };
            *slot = Some((elapsed, row));
        }
    }
    Ok(best.into_iter().flatten().map(|(_, r)| r).collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
