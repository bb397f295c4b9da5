//! Report assembly and artifact files.
//!
//! `report.json` and every CSV except `table4_queries.csv` and
//! `fig6_scalability.csv` are pure functions of the configuration. Wall-clock
//! measurements go to `timing.json` and those two tables.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::accounting::{AccountingModel, CostBreakdown, EnergyBreakdown};
use super::metrics::{reduction, quantile, ByteTotals, DetectionScores};
use super::sweep::{write_sweep_csv, SweepRow};
use crate::anomaly::AnomalyKind;
use crate::edge::{write_decision_csv, EdgeWork, PipelineKind};
use crate::kg::{
    parse_query, run_query, scan_query_in, write_ntriples, Class, GraphState, KgError, Query, Triple,
};
use crate::rng::substream;
use crate::scenario::{LatencySummary, ScenarioConfig, ScenarioRun};
use crate::sensorgen::{Family, SensorKind};
use crate::transport::write_delivery_csv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub readings: usize,
    pub locations: u32,
    pub categories: usize,
    pub horizon_days: f64,
    pub labeled: usize,
    pub anomaly_fraction: f64,
    pub missing_points: usize,
    pub by_kind: BTreeMap<AnomalyKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSection {
    pub pipeline: PipelineKind,
    pub reduction: f64,
    pub reduction_by_family: BTreeMap<Family, f64>,
    pub detection: DetectionScores,
    pub bytes: ByteTotals,
    pub packets: usize,
    pub dropped_packets: usize,
    pub synthetic_readings: usize,
    /// Steps from observation to delivery.
    pub latency: LatencySummary,
    pub energy: EnergyBreakdown,
    pub cost: CostBreakdown,
    pub edge_work: EdgeWork,
    pub peak_state: usize,
    pub rule_cycles: u64,
    pub provider_fallbacks: u64,
    pub rules_generated: u64,
    pub rules_rejected: u64,
    pub kg_triples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub accounting_model: AccountingModel,
    pub pipelines: Vec<PipelineSection>,
}

pub fn build_report(cfg: &ScenarioConfig, run: &ScenarioRun) -> MetricsReport {
    let ds = &run.prepared.dataset;
    let mut by_kind = BTreeMap::new();
    let mut missing_points = 0;
    for r in &ds.readings {
        match r.label {
            Some(l) if l.kind == AnomalyKind::Missing => missing_points += 1,
            Some(l) => *by_kind.entry(l.kind).or_insert(0) += 1,
            None if r.value.is_none() => missing_points += 1,
            None => {}
        }
    }
    let labeled: usize = by_kind.values().sum();
    let categories = {
        let mut seen: Vec<SensorKind> = ds.readings.iter().map(|r| r.kind).collect();
        seen.sort();
        seen.dedup();
        seen.len()
    };
    let dataset = DatasetSummary {
        readings: ds.readings.len(),
        locations: ds.locations,
        categories,
        horizon_days: ds.horizon_days(),
        labeled,
        anomaly_fraction: if ds.readings.is_empty() { 0.0 } else { labeled as f64 / ds.readings.len() as f64 },
        missing_points,
        by_kind,
    };
    let raw = &run.prepared.raw_by_family;
    let pipelines = run
        .results
        .iter()
        .zip(&run.accounting)
        .map(|(r, a)| PipelineSection {
            pipeline: r.kind,
            reduction: reduction(r.bytes.delivered, r.bytes.raw),
            reduction_by_family: raw
                .iter()
                .map(|(f, &bytes)| (*f, reduction(r.bytes.delivered_by_family.get(f).copied().unwrap_or(0), bytes)))
                .collect(),
            detection: r.detection,
            bytes: r.bytes.clone(),
            packets: r.run.packets.len(),
            dropped_packets: r.deliveries.iter().filter(|d| d.delivered_at().is_none()).count(),
            synthetic_readings: r.run.synthetic,
            latency: r.latency,
            energy: a.energy,
            cost: a.cost,
            edge_work: r.run.work,
            peak_state: r.run.peak_state,
            rule_cycles: r.run.rule_cycles,
            provider_fallbacks: r.run.fallbacks,
            rules_generated: r.run.rules_generated,
            rules_rejected: r.run.rules_rejected,
            kg_triples: r.graph.len(),
        })
        .collect();
    MetricsReport {
        seed: cfg.seed,
        dataset,
        accounting_model: run.model,
        pipelines,
    }
}

/// The five query classes in table order.
pub const QUERY_CLASSES: [(&str, &str); 5] = [
    ("entity_lookup", "O(1)"),
    ("relationship_traversal", "O(degree)"),
    ("multi_hop", "O(reached edges)"),
    ("cross_domain", "O(join candidates)"),
    ("temporal_pattern", "O(log n + window)"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTiming {
    pub class: String,
    pub samples: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    /// Fraction of samples whose result equals the full-scan result.
    pub accuracy: f64,
    pub complexity: String,
}

/// Seeded sample queries per class over the entities present in `g`.
pub fn sample_queries(g: &GraphState, seed: u64, per_class: usize) -> Vec<(usize, Query)> {
    let mut rng = substream(seed, "kg-queries", 0, 0);
    let mut sensors = Vec::new();
    let mut locations = Vec::new();
    let mut districts = Vec::new();
    let mut events = Vec::new();
    for (id, class) in g.entities() {
        match class {
            Class::Sensor => sensors.push(id.to_string()),
            Class::Location if id.starts_with("district/") => districts.push(id.to_string()),
            Class::Location => locations.push(id.to_string()),
            Class::Event => events.push(id.to_string()),
            _ => {}
        }
    }
    let t_max = g.triples().map(|t| t.t).max().unwrap_or(0);
    let pick = |v: &[String], rng: &mut crate::rng::SimRng| -> String {
        if v.is_empty() {
            "absent/0".to_string()
        } else {
            v[rng.random_range(0..v.len())].clone()
        }
    };
    let mut out = Vec::new();
    for _ in 0..per_class {
        let lookup_pool = if rng.random_bool(0.5) { &sensors } else { &events };
        let e = pick(lookup_pool, &mut rng);
        out.push((0, Query::Lookup(e)));
        let q = if rng.random_bool(0.5) {
            let l = pick(&locations, &mut rng);
            format!("traverse {l} locatedAt in")
        } else {
            let s = pick(&sensors, &mut rng);
            format!("traverse {s} producedBy in")
        };
        out.push((1, parse_query(&q).expect("sample query")));
        let s = pick(&sensors, &mut rng);
        let depth = rng.random_range(1..=3);
        out.push((2, parse_query(&format!("hops {s} {depth} locatedAt,partOf,adjacentTo")).expect("sample query")));
        let d = pick(&districts, &mut rng);
        let q = if rng.random_bool(0.5) {
            format!("match ?s locatedAt ?l . ?l partOf {d} . ?r producedBy ?s . ?r indicates ?a")
        } else {
            let k = SensorKind::ALL[rng.random_range(0..SensorKind::ALL.len())];
            format!("match ?p governs {d} . ?l partOf {d} . ?s locatedAt ?l . ?s measures \"{}\"", k.name())
        };
        out.push((3, parse_query(&q).expect("sample query")));
        let from = rng.random_range(0..=t_max);
        let to = from + 288;
        let cat = if rng.random_bool(0.3) {
            "*".to_string()
        } else {
            SensorKind::ALL[rng.random_range(0..SensorKind::ALL.len())].name().to_string()
        };
        let agg = ["count", "mean", "max"][rng.random_range(0..3)];
        out.push((4, parse_query(&format!("series {cat} {from} {to} {agg}")).expect("sample query")));
    }
    out
}

/// Median latency of each query class, and agreement with the full scan.
pub fn time_queries(g: &GraphState, seed: u64, per_class: usize) -> Result<Vec<QueryTiming>, KgError> {
    let all: Vec<Triple> = g.triples().collect();
    let mut ms: Vec<Vec<f64>> = vec![Vec::new(); QUERY_CLASSES.len()];
    let mut agree = vec![0usize; QUERY_CLASSES.len()];
    for (class, q) in sample_queries(g, seed, per_class) {
        let start = Instant::now();
        let got = run_query(g, &q)?;
        ms[class].push(start.elapsed().as_secs_f64() * 1e3);
        if got == scan_query_in(g, &all, &q)? {
            agree[class] += 1;
        }
    }
    Ok(QUERY_CLASSES
        .iter()
        .zip(ms)
        .zip(agree)
        .map(|((&(class, complexity), mut v), ok)| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            QueryTiming {
                class: class.to_string(),
                samples: n,
                median_ms: quantile(&v, 0.5),
                mean_ms: if n == 0 { 0.0 } else { v.iter().sum::<f64>() / n as f64 },
                accuracy: if n == 0 { 0.0 } else { ok as f64 / n as f64 },
                complexity: complexity.to_string(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTiming {
    pub pipeline: PipelineKind,
    pub wall_s: f64,
    /// Readings per second.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub pipelines: Vec<PipelineTiming>,
    /// Measured on the graph of the last pipeline run.
    pub queries: Vec<QueryTiming>,
    pub scalability: Vec<SweepRow>,
}

pub fn pipeline_timings(run: &ScenarioRun) -> Vec<PipelineTiming> {
    let n = run.prepared.dataset.readings.len() as f64;
    run.results
        .iter()
        .map(|r| {
            let s = r.wall.as_secs_f64();
            PipelineTiming {
                pipeline: r.kind,
                wall_s: s,
                throughput: if s > 0.0 { n / s } else { 0.0 },
            }
        })
        .collect()
}

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> io::Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    written.push(path);
    Ok(BufWriter::new(f))
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_table<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_io)?;
    for r in rows {
        w.write_record(r).map_err(csv_io)?;
    }
    w.flush()
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes every deterministic artifact of a run into `dir`.
pub fn write_artifacts(dir: &Path, report: &MetricsReport, run: &ScenarioRun) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut f = create(dir, "report.json", &mut written)?;
    serde_json::to_writer_pretty(&mut f, report).map_err(io::Error::other)?;
    writeln!(f)?;
    f.flush()?;

    let names: Vec<String> = report.pipelines.iter().map(|p| p.pipeline.name().to_string()).collect();
    let rows: Vec<Vec<String>> = report
        .pipelines
        .iter()
        .map(|p| {
            let d = &p.detection;
            vec![
                p.pipeline.name().to_string(),
                fmt(d.precision),
                fmt(d.recall),
                fmt(d.f1),
                fmt(d.tpr),
                fmt(d.fpr),
                d.tp.to_string(),
                d.fp.to_string(),
                d.fn_.to_string(),
                d.tn.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = ["approach", "precision", "recall", "f1", "tpr", "fpr", "tp", "fp", "fn", "tn"]
        .map(String::from)
        .to_vec();
    write_table(create(dir, "table1_detection.csv", &mut written)?, &header, &rows)?;

    let mut header = vec!["component".to_string()];
    header.extend(names.iter().cloned());
    let energy = |name: &str, get: fn(&EnergyBreakdown) -> f64| {
        let mut row = vec![name.to_string()];
        row.extend(report.pipelines.iter().map(|p| fmt(get(&p.energy))));
        row
    };
    let rows = vec![
        energy("edge", |e| e.edge),
        energy("network", |e| e.network),
        energy("central", |e| e.central),
        energy("storage", |e| e.storage),
        energy("total", |e| e.total),
    ];
    write_table(create(dir, "table2_energy.csv", &mut written)?, &header, &rows)?;

    header[0] = "category".into();
    let cost = |name: &str, get: fn(&CostBreakdown) -> f64| {
        let mut row = vec![name.to_string()];
        row.extend(report.pipelines.iter().map(|p| fmt(get(&p.cost))));
        row
    };
    let rows = vec![
        cost("compute", |c| c.compute),
        cost("storage", |c| c.storage),
        cost("bandwidth", |c| c.bandwidth),
        cost("maintenance", |c| c.maintenance),
        cost("energy", |c| c.energy),
        cost("total", |c| c.total),
    ];
    write_table(create(dir, "table3_cost.csv", &mut written)?, &header, &rows)?;

    let mut rows = Vec::new();
    for (p, r) in report.pipelines.iter().zip(&run.results) {
        for (fam, &raw) in &run.prepared.raw_by_family {
            let delivered = r.bytes.delivered_by_family.get(fam).copied().unwrap_or(0);
            rows.push(vec![
                p.pipeline.name().to_string(),
                fam.name().to_string(),
                raw.to_string(),
                delivered.to_string(),
                fmt(reduction(delivered, raw)),
            ]);
        }
    }
    let header = ["pipeline", "family", "raw_bytes", "delivered_bytes", "reduction"].map(String::from).to_vec();
    write_table(create(dir, "fig3_reduction.csv", &mut written)?, &header, &rows)?;

    let header = ["pipeline", "day", "collected", "raw_bytes", "delivered_bytes", "cumulative_raw", "cumulative_delivered", "cumulative_saving"]
        .map(String::from)
        .to_vec();
    write_table(create(dir, "fig4_timeseries.csv", &mut written)?, &header, &time_series(run))?;

    for r in &run.results {
        let name = r.kind.name();
        write_decision_csv(&r.run.decisions, create(dir, &format!("decisions_{name}.csv"), &mut written)?)
            .map_err(csv_io)?;
        write_delivery_csv(&r.deliveries, create(dir, &format!("deliveries_{name}.csv"), &mut written)?)
            .map_err(csv_io)?;
        let mut f = create(dir, &format!("graph_{name}.nt"), &mut written)?;
        write_ntriples(r.graph.state(), &mut f)?;
        f.flush()?;
    }
    Ok(written)
}

/// Per-day positives and bytes, with cumulative savings against raw volume.
fn time_series(run: &ScenarioRun) -> Vec<Vec<String>> {
    let ds = &run.prepared.dataset;
    let steps_per_day = (86_400 / ds.clock.interval_seconds.max(1)).max(1);
    let days = ds.horizon_steps.div_ceil(steps_per_day).max(1) as usize;
    let mut raw = vec![0u64; days];
    for (r, d) in ds.readings.iter().zip(&run.results[0].run.decisions) {
        raw[((r.t / steps_per_day) as usize).min(days - 1)] += d.raw_bytes;
    }
    let mut rows = Vec::new();
    for res in &run.results {
        let mut collected = vec![0u64; days];
        let mut delivered = vec![0u64; days];
        for (r, d) in ds.readings.iter().zip(&res.run.decisions) {
            if d.decision.is_positive() {
                collected[((r.t / steps_per_day) as usize).min(days - 1)] += 1;
            }
        }
        for (p, d) in res.run.packets.iter().zip(&res.deliveries) {
            if let Some(at) = d.delivered_at() {
                delivered[((at / steps_per_day) as usize).min(days - 1)] += p.wire_bytes;
            }
        }
        let (mut cr, mut cd) = (0u64, 0u64);
        for day in 0..days {
            cr += raw[day];
            cd += delivered[day];
            rows.push(vec![
                res.kind.name().to_string(),
                day.to_string(),
                collected[day].to_string(),
                raw[day].to_string(),
                delivered[day].to_string(),
                cr.to_string(),
                cd.to_string(),
                fmt(reduction(cd, cr)),
            ]);
        }
    }
    rows
}

/// Writes `timing.json` and the machine-dependent tables.
pub fn write_timing(dir: &Path, timing: &TimingReport) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut f = create(dir, "timing.json", &mut written)?;
    serde_json::to_writer_pretty(&mut f, timing).map_err(io::Error::other)?;
    writeln!(f)?;
    f.flush()?;
    let rows: Vec<Vec<String>> = timing
        .queries
        .iter()
        .map(|q| {
            vec![
                q.class.clone(),
                format!("{:.4}", q.median_ms),
                format!("{:.4}", q.mean_ms),
                fmt(q.accuracy),
                q.complexity.clone(),
                q.samples.to_string(),
            ]
        })
        .collect();
    let header = ["query_type", "median_ms", "mean_ms", "accuracy", "complexity", "samples"].map(String::from).to_vec();
    write_table(create(dir, "table4_queries.csv", &mut written)?, &header, &rows)?;
    if !timing.scalability.is_empty() {
        write_sweep_csv(&timing.scalability, create(dir, "fig6_scalability.csv", &mut written)?).map_err(csv_io)?;
    }
    Ok(written)
}
