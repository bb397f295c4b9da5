//! The five filtering pipelines and packet assembly.
//!
//! Every pipeline walks the stream one step at a time, decides each reading,
//! and batches the survivors of a step into packets of at most
//! `batch_size` readings per data class. Packets carry a priority score and a
//! compression ratio; wire bytes are `ceil(raw · CR)`.

mod compression;
mod features;
mod priority;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::compression::{CompressionModel, DataClass};
pub use self::features::{BaselineConfig, FeatureTracker, RollingStats};
pub use self::priority::{score_priority, BatchItem, PriorityScore, PriorityWeights, DEFAULT_TAU};
use crate::rules::{
    parse_rules_from, Action, CycleOutcome, ParseErrors, RuleEngine, RuleError, RuleSet, ScoredObservation,
};
use crate::sensorgen::{
    expected_value_at_hour, ByteSizes, CategoryTable, Dataset, SensorKind, SensorReading, CATEGORY_COUNT,
};
use crate::transport::{ChannelConfig, PacketHeader};

/// The hand-written rule file used by the expert baseline.
pub const EXPERT_RULES: &str = include_str!("../../assets/expert_rules.txt");

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("statistical window must hold at least 2 readings, got {0}")]
    WindowTooSmall(usize),
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("stream is not time-ordered at reading {0}")]
    Unordered(u64),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("expert rules:\n{0}")]
    ExpertRules(ParseErrors),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Centralized,
    StaticThreshold,
    Statistical,
    Expert,
    Adaptive,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 5] = [
        PipelineKind::Centralized,
        PipelineKind::StaticThreshold,
        PipelineKind::Statistical,
        PipelineKind::Expert,
        PipelineKind::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::Centralized => "centralized",
            PipelineKind::StaticThreshold => "static_threshold",
            PipelineKind::Statistical => "statistical",
            PipelineKind::Expert => "expert",
            PipelineKind::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PipelineKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown pipeline `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeConfig {
    /// Static thresholds sit this many noise scales outside the profile.
    pub static_margin: f64,
    pub statistical_window: usize,
    pub statistical_z: f64,
    pub batch_size: usize,
    /// Recency time constant in steps.
    pub tau: f64,
    pub priority: PriorityWeights,
    pub compression: CompressionModel,
    pub bytes: ByteSizes,
    pub baseline: BaselineConfig,
    /// Recent observations kept for context building.
    pub context_window: usize,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            static_margin: 4.0,
            statistical_window: 32,
            statistical_z: 3.0,
            batch_size: 16,
            tau: DEFAULT_TAU,
            priority: PriorityWeights::default(),
            compression: CompressionModel::default(),
            bytes: ByteSizes::default(),
            baseline: BaselineConfig::default(),
            context_window: 256,
        }
    }
}

/// Per-category transmit-outside band.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticThresholds {
    pub lo: [f64; CATEGORY_COUNT],
    pub hi: [f64; CATEGORY_COUNT],
}

impl StaticThresholds {
    /// The envelope of the expected profile over the day, widened by
    /// `margin` noise scales and cut to the clamp range.
    pub fn from_profile(gens: &CategoryTable, margin: f64) -> Self {
        let mut lo = [0.0; CATEGORY_COUNT];
        let mut hi = [0.0; CATEGORY_COUNT];
        for kind in SensorKind::ALL {
            let g = gens.get_or_default(kind);
            let (mut l, mut h) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..(24 * 20) {
                let m = expected_value_at_hour(kind, &g, i as f64 / 20.0);
                let s = g.noise_scale(kind, m);
                l = l.min(m - margin * s);
                h = h.max(m + margin * s);
            }
            lo[kind.index()] = l.max(g.clamp.min);
            hi[kind.index()] = h.min(g.clamp.max);
        }
        Self { lo, hi }
    }

    pub fn fires(&self, kind: SensorKind, v: f64) -> bool {
        v <= self.lo[kind.index()] || v >= self.hi[kind.index()]
    }
}

pub enum Pipeline {
    Centralized,
    StaticThreshold(StaticThresholds),
    Statistical { window: usize, z: f64 },
    Expert(RuleSet),
    Adaptive(Box<RuleEngine>),
}

impl Pipeline {
    pub fn statistical(window: usize, z: f64) -> Result<Self, EdgeError> {
        if window < 2 {
            return Err(EdgeError::WindowTooSmall(window));
        }
        Ok(Pipeline::Statistical { window, z })
    }

    /// Parses an expert rule file. Rules are evaluated in file order.
    pub fn expert(text: &str) -> Result<Self, EdgeError> {
        let rules = parse_rules_from(text, "expert").map_err(EdgeError::ExpertRules)?;
        Ok(Pipeline::Expert(RuleSet::new(rules)))
    }

    pub fn kind(&self) -> PipelineKind {
        match self {
            Pipeline::Centralized => PipelineKind::Centralized,
            Pipeline::StaticThreshold(_) => PipelineKind::StaticThreshold,
            Pipeline::Statistical { .. } => PipelineKind::Statistical,
            Pipeline::Expert(_) => PipelineKind::Expert,
            Pipeline::Adaptive(_) => PipelineKind::Adaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Transmit,
    Escalate,
    Drop,
    Aggregate,
}

impl Decision {
    pub fn name(self) -> &'static str {
        match self {
            Decision::Transmit => "transmit",
            Decision::Escalate => "escalate",
            Decision::Drop => "drop",
            Decision::Aggregate => "aggregate",
        }
    }

    /// Counts as a detection.
    pub fn is_positive(self) -> bool {
        matches!(self, Decision::Transmit | Decision::Escalate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub reading_id: u64,
    pub pipeline: PipelineKind,
    pub decision: Decision,
    /// Empty when no rule fired.
    pub rule_id: String,
    pub priority: Option<f64>,
    pub cr: Option<f64>,
    pub raw_bytes: u64,
    /// Wire bytes charged to this row; an aggregate's bytes go to the row
    /// that completed it.
    pub wire_bytes: u64,
    /// Marked anomalous by the pipeline's own detector.
    pub flagged: bool,
    pub packet_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketItem {
    pub reading: SensorReading,
    /// Decision row credited with this item.
    pub log_index: usize,
    pub flagged: bool,
    /// Synthetic aggregate standing for this many readings.
    pub members: usize,
    pub raw_bytes: u64,
    pub wire_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub created_at: u64,
    pub class: DataClass,
    pub items: Vec<PacketItem>,
    pub priority: PriorityScore,
    pub compression_ratio: f64,
    pub raw_bytes: u64,
    pub wire_bytes: u64,
}

impl Packet {
    pub fn header(&self) -> PacketHeader {
        PacketHeader {
            id: self.id,
            created_at: self.created_at,
            wire_bytes: self.wire_bytes,
            priority: self.priority.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRun {
    pub pipeline: PipelineKind,
    /// One row per input reading, in input order.
    pub decisions: Vec<DecisionRecord>,
    pub packets: Vec<Packet>,
    /// Aggregate readings emitted.
    pub synthetic: usize,
    pub work: EdgeWork,
    /// Largest number of values held in streaming state at any step.
    pub peak_state: usize,
    pub rule_cycles: u64,
    pub fallbacks: u64,
    pub rules_generated: u64,
    pub rules_rejected: u64,
}

/// Work done at the edge, by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeWork {
    pub readings: u64,
    /// Threshold tests and rule conditions evaluated.
    pub checks: u64,
    /// Observations encoded into context vectors.
    pub context: u64,
    /// Candidate rules produced.
    pub generated: u64,
}

impl EdgeWork {
    pub fn total(&self) -> u64 {
        self.readings + self.checks + self.context + self.generated
    }
}

impl EdgeRun {
    pub fn raw_bytes(&self) -> u64 {
        self.decisions.iter().map(|d| d.raw_bytes).sum()
    }
}

pub fn write_decision_csv<W: Write>(decisions: &[DecisionRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "reading_id",
        "pipeline",
        "decision",
        "rule_id",
        "priority",
        "cr",
        "raw_bytes",
        "wire_bytes",
        "flagged",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for d in decisions {
        w.write_record([
            d.reading_id.to_string(),
            d.pipeline.name().to_string(),
            d.decision.name().to_string(),
            d.rule_id.clone(),
            opt(d.priority),
            opt(d.cr),
            d.raw_bytes.to_string(),
            d.wire_bytes.to_string(),
            u8::from(d.flagged).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Splits `total` across `weights` by largest remainder.
pub fn apportion_bytes(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<u128> = weights.iter().map(|&w| u128::from(total) * u128::from(w)).collect();
    let mut shares: Vec<u64> = exact.iter().map(|e| (e / u128::from(sum)) as u64).collect();
    let mut left = total - shares.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] % u128::from(sum)).cmp(&(exact[a] % u128::from(sum))).then(a.cmp(&b)));
    for i in order {
        if left == 0 {
            break;
        }
        shares[i] += 1;
        left -= 1;
    }
    shares
}

struct Outgoing {
    reading: SensorReading,
    log_index: usize,
    oldest: u64,
    flagged: bool,
    members: usize,
}

struct PendingAggregate {
    n: usize,
    members: Vec<usize>,
}

struct Runner<'a> {
    kind: PipelineKind,
    ds: &'a Dataset,
    cfg: &'a EdgeConfig,
    ch: &'a ChannelConfig,
    decisions: Vec<DecisionRecord>,
    packets: Vec<Packet>,
    pending: BTreeMap<(u32, usize), PendingAggregate>,
    next_synthetic: u64,
    synthetic: usize,
    work: EdgeWork,
}

impl Runner<'_> {
    fn aggregate(&mut self, idx: usize, n: u32, out: &mut Vec<Outgoing>) {
        let r = &self.ds.readings[idx];
        let key = (r.location, r.kind.index());
        let p = self.pending.entry(key).or_insert_with(|| PendingAggregate {
            n: n.max(1) as usize,
            members: Vec::new(),
        });
        p.members.push(idx);
        if p.members.len() >= p.n {
            let p = self.pending.remove(&key).expect("pending group");
            let now = r.t;
            out.push(self.emit_aggregate(&p.members, now));
        }
    }

    fn emit_aggregate(&mut self, members: &[usize], now: u64) -> Outgoing {
        let rs: Vec<&SensorReading> = members.iter().map(|&i| &self.ds.readings[i]).collect();
        let values: Vec<f64> = rs.iter().filter_map(|r| r.value).collect();
        let value = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
        let first = rs[0];
        let reading = SensorReading {
            id: self.next_synthetic,
            location: first.location,
            kind: first.kind,
            t: now,
            value,
            label: None,
        };
        self.next_synthetic += 1;
        self.synthetic += 1;
        Outgoing {
            reading,
            log_index: *members.last().expect("non-empty group"),
            oldest: rs.iter().map(|r| r.t).min().unwrap_or(now),
            flagged: false,
            members: members.len(),
        }
    }

    fn pack(&mut self, out: Vec<Outgoing>, now: u64, step_locations: usize) -> Result<(), EdgeError> {
        for class in [DataClass::CctvMetadata, DataClass::Scalar] {
            let items: Vec<&Outgoing> = out.iter().filter(|o| DataClass::of(o.reading.kind) == class).collect();
            for chunk in items.chunks(self.cfg.batch_size) {
                let batch: Vec<BatchItem> = chunk
                    .iter()
                    .map(|o| BatchItem {
                        location: o.reading.location,
                        kind: o.reading.kind,
                        t: o.oldest,
                        flagged: o.flagged,
                    })
                    .collect();
                let priority = score_priority(&batch, now, step_locations, self.cfg.tau, &self.cfg.priority);
                let cr = if self.kind == PipelineKind::Centralized {
                    1.0
                } else {
                    self.cfg
                        .compression
                        .ratio(class, self.ch.bandwidth_at(now) as f64, self.ch.base_latency as f64, priority.score)
                        .map_err(EdgeError::Config)?
                };
                let raws: Vec<u64> = chunk.iter().map(|o| self.cfg.bytes.of(o.reading.kind)).collect();
                let raw: u64 = raws.iter().sum();
                let wire = ((raw as f64) * cr).ceil() as u64;
                let shares = apportion_bytes(wire, &raws);
                let id = self.packets.len() as u64;
                let mut packet_items = Vec::with_capacity(chunk.len());
                for ((o, &r), &w) in chunk.iter().zip(&raws).zip(&shares) {
                    let d = &mut self.decisions[o.log_index];
                    d.wire_bytes += w;
                    d.packet_id = Some(id);
                    d.priority = Some(priority.score);
                    d.cr = Some(cr);
                    packet_items.push(PacketItem {
                        reading: o.reading.clone(),
                        log_index: o.log_index,
                        flagged: o.flagged,
                        members: o.members,
                        raw_bytes: r,
                        wire_bytes: w,
                    });
                }
                self.packets.push(Packet {
                    id,
                    created_at: now,
                    class,
                    items: packet_items,
                    priority,
                    compression_ratio: cr,
                    raw_bytes: raw,
                    wire_bytes: wire,
                });
            }
        }
        Ok(())
    }
}

/// Runs one pipeline over a time-ordered stream.
pub fn run_pipeline(
    pipeline: &mut Pipeline,
    ds: &Dataset,
    cfg: &EdgeConfig,
    ch: &ChannelConfig,
) -> Result<EdgeRun, EdgeError> {
    if cfg.batch_size == 0 {
        return Err(EdgeError::ZeroBatch);
    }
    cfg.priority.normalized().map_err(EdgeError::Config)?;
    ch.validate().map_err(|e| EdgeError::Config(e.to_string()))?;
    if let Some(w) = ds.readings.windows(2).find(|w| w[1].t < w[0].t) {
        return Err(EdgeError::Unordered(w[1].id));
    }
    let kind = pipeline.kind();
    let readings = &ds.readings;
    let mut run = Runner {
        kind,
        ds,
        cfg,
        ch,
        decisions: Vec::with_capacity(readings.len()),
        packets: Vec::new(),
        pending: BTreeMap::new(),
        next_synthetic: readings.iter().map(|r| r.id + 1).max().unwrap_or(0),
        synthetic: 0,
        work: EdgeWork::default(),
    };
    let mut tracker = FeatureTracker::new(&ds.generators, ds.clock, cfg.baseline);
    let mut stat_windows: Vec<RollingStats> = match pipeline {
        Pipeline::Statistical { window, .. } => (0..CATEGORY_COUNT).map(|_| RollingStats::new(*window)).collect(),
        _ => Vec::new(),
    };
    let mut context: std::collections::VecDeque<ScoredObservation> = std::collections::VecDeque::new();
    let mut next_regen: Option<u64> = None;
    let mut outcome = CycleOutcome::new();
    let uses_rules = matches!(pipeline, Pipeline::Expert(_) | Pipeline::Adaptive(_));
    let mut peak_state = 0;

    let mut start = 0;
    while start < readings.len() {
        let now = readings[start].t;
        let end = start + readings[start..].iter().take_while(|r| r.t == now).count();
        let step: Vec<&SensorReading> = readings[start..end].iter().collect();
        let mut locs: Vec<u32> = step.iter().map(|r| r.location).collect();
        locs.sort_unstable();
        locs.dedup();
        run.work.readings += step.len() as u64;

        let features = if uses_rules {
            let (features, signed) = tracker.step(&step);
            if let Pipeline::Adaptive(engine) = pipeline {
                for (r, z) in step.iter().zip(&signed) {
                    if context.len() == cfg.context_window.max(1) {
                        context.pop_front();
                    }
                    context.push_back(ScoredObservation {
                        kind: r.kind,
                        location: r.location,
                        t: r.t,
                        value: r.value,
                        z: *z,
                    });
                }
                if next_regen.is_none_or(|t| now >= t) {
                    if next_regen.is_some() {
                        engine.record_outcome(std::mem::replace(&mut outcome, CycleOutcome::new()));
                    }
                    let window: Vec<ScoredObservation> = context.iter().copied().collect();
                    let before = engine.rules_generated;
                    engine.regenerate(&window)?;
                    run.work.context += window.len() as u64;
                    run.work.generated += engine.rules_generated - before;
                    next_regen = Some(now + engine.ttl.max(1));
                }
            }
            features
        } else {
            Vec::new()
        };

        let mut out = Vec::new();
        for (j, r) in step.iter().enumerate() {
            let idx = start + j;
            let (decision, rule_id, flagged, agg) = match pipeline {
                Pipeline::Centralized => (Decision::Transmit, String::new(), false, None),
                Pipeline::StaticThreshold(th) => {
                    run.work.checks += 1;
                    match r.value {
                        Some(v) if th.fires(r.kind, v) => (Decision::Transmit, String::new(), true, None),
                        _ => (Decision::Drop, String::new(), false, None),
                    }
                }
                Pipeline::Statistical { z, .. } => {
                    run.work.checks += 1;
                    match r.value {
                        Some(v) => {
                            let w = &mut stat_windows[r.kind.index()];
                            let fire = w.len() >= 2 && w.zscore(v) > *z;
                            w.push(v);
                            if fire {
                                (Decision::Transmit, String::new(), true, None)
                            } else {
                                (Decision::Drop, String::new(), false, None)
                            }
                        }
                        None => (Decision::Drop, String::new(), false, None),
                    }
                }
                Pipeline::Expert(_) | Pipeline::Adaptive(_) => {
                    let snapshot;
                    let rules: &RuleSet = match pipeline {
                        Pipeline::Expert(rs) => rs,
                        Pipeline::Adaptive(engine) => {
                            snapshot = engine.snapshot();
                            &snapshot
                        }
                        _ => unreachable!(),
                    };
                    let (hit, checked) = rules.evaluate(&features[j]);
                    run.work.checks += checked;
                    match hit {
                        None => (Decision::Drop, String::new(), false, None),
                        Some(rule) => {
                            let floor = rule.id.starts_with("floor-");
                            match rule.action {
                                Action::Transmit => (Decision::Transmit, rule.id.clone(), !floor, None),
                                Action::Escalate => (Decision::Escalate, rule.id.clone(), !floor, None),
                                Action::Drop => (Decision::Drop, rule.id.clone(), false, None),
                                Action::Aggregate(n) => (Decision::Aggregate, rule.id.clone(), false, Some(n)),
                            }
                        }
                    }
                }
            };
            outcome.record(r.kind, decision.is_positive());
            run.decisions.push(DecisionRecord {
                reading_id: r.id,
                pipeline: kind,
                decision,
                rule_id,
                priority: None,
                cr: None,
                raw_bytes: cfg.bytes.of(r.kind),
                wire_bytes: 0,
                flagged,
                packet_id: None,
            });
            if decision.is_positive() {
                out.push(Outgoing {
                    reading: (*r).clone(),
                    log_index: idx,
                    oldest: r.t,
                    flagged,
                    members: 1,
                });
            } else if let Some(n) = agg {
                run.aggregate(idx, n, &mut out);
            }
        }
        let open: usize = out.len();
        run.pack(out, now, locs.len())?;

        let state = tracker.state_size()
            + stat_windows.iter().map(RollingStats::len).sum::<usize>()
            + context.len()
            + run.pending.values().map(|p| p.members.len()).sum::<usize>()
            + open;
        peak_state = peak_state.max(state);
        start = end;
    }

    if !run.pending.is_empty() {
        let now = readings.last().map_or(0, |r| r.t);
        let pending = std::mem::take(&mut run.pending);
        let mut out = Vec::new();
        let mut locs = Vec::new();
        for p in pending.values() {
            locs.push(readings[p.members[0]].location);
            out.push(run.emit_aggregate(&p.members, now));
        }
        locs.sort_unstable();
        locs.dedup();
        run.pack(out, now, locs.len())?;
    }

    let (rule_cycles, fallbacks, rules_generated, rules_rejected) = match pipeline {
        Pipeline::Adaptive(engine) => (engine.cycles, engine.fallbacks, engine.rules_generated, engine.rejected_total),
        _ => (0, 0, 0, 0),
    };
    Ok(EdgeRun {
        pipeline: kind,
        decisions: run.decisions,
        packets: run.packets,
        synthetic: run.synthetic,
        work: run.work,
        peak_state,
        rule_cycles,
        fallbacks,
        rules_generated,
        rules_rejected,
    })
}
