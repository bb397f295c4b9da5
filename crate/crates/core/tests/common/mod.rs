//! Reference implementations shared by the integration suites. Each one is
//! written from the behavioural description, not from the library code.

#![allow(dead_code)]

pub mod diurnal;
pub mod kg_check;
pub mod labels;
pub mod rule_check;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use urbanedge_core::kg::{Class, KnowledgeGraph, Literal, Object, Seed, Term};
use urbanedge_core::scenario::{run_scenario, ScenarioConfig, ScenarioRun};
use urbanedge_core::transport::PacketHeader;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The default seeded run, computed once per test binary.
pub fn seeded_run() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario(&ScenarioConfig::default()).expect("default scenario runs"))
}

// Channel replay.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Delivered(u64),
    Dropped(u64),
}

/// Steps the channel one time unit at a time over a plain vector queue.
/// Returns one fate per packet, in input order.
pub fn replay_channel(
    packets: &[PacketHeader],
    bandwidth: impl Fn(u64) -> u64,
    latency: u64,
    capacity: usize,
) -> Vec<Fate> {
    let pos: BTreeMap<u64, usize> = packets.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    let mut fate: Vec<Option<Fate>> = vec![None; packets.len()];
    let mut waiting: Vec<PacketHeader> = Vec::new();
    let mut current: Option<(PacketHeader, u64)> = None;
    let mut arrivals = packets.iter().peekable();
    let mut t = packets.first().map_or(0, |p| p.created_at);
    // Strictly better: higher priority, then older, then lower id.
    let better = |a: &PacketHeader, b: &PacketHeader| {
        a.priority > b.priority
            || (a.priority == b.priority && (a.created_at, a.id) < (b.created_at, b.id))
    };
    while fate.iter().any(Option::is_none) {
        while let Some(p) = arrivals.next_if(|p| p.created_at == t) {
            waiting.push(*p);
            if waiting.len() > capacity {
                let mut worst = 0;
                for i in 1..waiting.len() {
                    if better(&waiting[worst], &waiting[i]) {
                        worst = i;
                    }
                }
                let victim = waiting.remove(worst);
                fate[pos[&victim.id]] = Some(Fate::Dropped(t));
            }
        }
        let mut budget = bandwidth(t);
        loop {
            if current.is_none() {
                if waiting.is_empty() {
                    break;
                }
                let mut best = 0;
                for i in 1..waiting.len() {
                    if better(&waiting[i], &waiting[best]) {
                        best = i;
                    }
                }
                current = Some((waiting.remove(best), 0));
            }
            let (p, sent) = current.as_mut().expect("set above");
            let need = p.wire_bytes - *sent;
            if need <= budget {
                budget -= need;
                fate[pos[&p.id]] = Some(Fate::Delivered(t + latency));
                current = None;
            } else {
                *sent += budget;
                break;
            }
        }
        t += 1;
    }
    fate.into_iter().map(|f| f.expect("resolved")).collect()
}

/// A small random packet stream, ordered by creation step.
pub fn random_packets(r: &mut impl Rng, n: usize, max_gap: u64, max_bytes: u64, ties: bool) -> Vec<PacketHeader> {
    let mut t = r.random_range(0..5);
    (0..n as u64)
        .map(|id| {
            t += r.random_range(0..=max_gap);
            let priority = if ties {
                f64::from(r.random_range(0..5u8)) / 4.0
            } else {
                r.random::<f64>()
            };
            PacketHeader {
                // Unique, but not in creation order.
                id: id * 7919 % 10_007,
                created_at: t,
                wire_bytes: r.random_range(0..=max_bytes),
                priority,
            }
        })
        .collect()
}

// Knowledge graph fixtures.

/// One asserted triple as the fixture builder recorded it.
#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub s: String,
    pub p: String,
    pub o: Term,
    pub t: u64,
}

pub const CATEGORIES: [&str; 4] = ["temperature", "vibration", "vehicle_count", "noise_level"];

/// A random graph plus the list of distinct facts the builder asserted.
pub struct Fixture {
    pub graph: KnowledgeGraph,
    pub facts: Vec<Fact>,
    pub locations: Vec<String>,
    pub sensors: Vec<String>,
    pub readings: Vec<String>,
}

impl Fixture {
    pub fn build(r: &mut impl Rng, target: usize) -> Fixture {
        let ontology = Seed::default_seed().ontology;
        let mut fx = Fixture {
            graph: KnowledgeGraph::new(ontology),
            facts: Vec::new(),
            locations: Vec::new(),
            sensors: Vec::new(),
            readings: Vec::new(),
        };
        let mut seen = BTreeSet::new();
        let n_loc = r.random_range(3..=30usize);
        fx.locations = (0..n_loc).map(|i| format!("location/{i}")).collect();
        let loc_edges = r.random_range(0..=3 * n_loc);
        for _ in 0..loc_edges {
            let a = fx.locations[r.random_range(0..n_loc)].clone();
            let b = fx.locations[r.random_range(0..n_loc)].clone();
            let p = if r.random_bool(0.5) { "partOf" } else { "adjacentTo" };
            fx.put(&mut seen, &a, Class::Location, p, Object::Entity(b, Class::Location), 0);
        }
        let n_sensors = r.random_range(1..=(target / 20).clamp(1, 200));
        for i in 0..n_sensors {
            let loc = r.random_range(0..n_loc);
            let cat = CATEGORIES[r.random_range(0..CATEGORIES.len())];
            let s = format!("sensor/{i}/{cat}");
            let l = fx.locations[loc].clone();
            fx.put(&mut seen, &s, Class::Sensor, "locatedAt", Object::Entity(l, Class::Location), 0);
            fx.put(&mut seen, &s, Class::Sensor, "measures", Object::Literal(Literal::Str(cat.into())), 0);
            fx.sensors.push(s);
        }
        let mut id = 0u64;
        while fx.facts.len() < target {
            let s = fx.sensors[r.random_range(0..fx.sensors.len())].clone();
            let t = r.random_range(0..200u64);
            let reading = format!("reading/{id}");
            id += 1;
            fx.put(&mut seen, &s, Class::Sensor, "reportedAt", Object::Literal(Literal::Step(t)), t);
            fx.put(&mut seen, &reading, Class::Event, "producedBy", Object::Entity(s, Class::Sensor), t);
            // Few distinct values so that series aggregates see exact ties.
            let v = f64::from(r.random_range(-40..60i32)) / 4.0;
            fx.put(&mut seen, &reading, Class::Event, "hasValue", Object::Literal(Literal::Real(v)), t);
            if r.random_bool(0.1) {
                let a = format!("anomaly/{}", id - 1);
                fx.put(&mut seen, &reading, Class::Event, "indicates", Object::Entity(a, Class::Event), t);
            }
            fx.readings.push(reading);
        }
        fx
    }

    fn put(&mut self, seen: &mut BTreeSet<(String, String, Term)>, s: &str, c: Class, p: &str, o: Object, t: u64) {
        let term = match &o {
            Object::Entity(e, _) => Term::Entity(e.clone()),
            Object::Literal(l) => Term::Literal(l.clone()),
        };
        let fresh = self.graph.assert(s, c, p, o, t).expect("fixture assertion is well typed");
        let key = (s.to_string(), p.to_string(), term.clone());
        assert_eq!(fresh, !seen.contains(&key), "idempotence of {key:?}");
        if seen.insert(key) {
            self.facts.push(Fact {
                s: s.to_string(),
                p: p.to_string(),
                o: term,
                t,
            });
        }
    }
}

/// Hop counts by boolean powers of the adjacency matrix over `preds`.
/// Entry `x` holds the least `k <= depth` with `(I + A)^k [start][x]` set.
pub fn reachability_by_powers(facts: &[Fact], start: &str, preds: &[&str], depth: usize) -> BTreeMap<String, usize> {
    let mut names: Vec<String> = vec![start.to_string()];
    let mut index: BTreeMap<String, usize> = BTreeMap::from([(start.to_string(), 0)]);
    let mut id = |n: &str, names: &mut Vec<String>| {
        *index.entry(n.to_string()).or_insert_with(|| {
            names.push(n.to_string());
            names.len() - 1
        })
    };
    let mut edges = Vec::new();
    for f in facts.iter().filter(|f| preds.contains(&f.p.as_str())) {
        if let Term::Entity(o) = &f.o {
            let a = id(&f.s, &mut names);
            let b = id(o, &mut names);
            edges.push((a, b));
        }
    }
    let n = names.len();
    let words = n.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; n];
    for i in 0..n {
        adj[i][i / 64] |= 1 << (i % 64);
    }
    for (a, b) in edges {
        adj[a][b / 64] |= 1 << (b % 64);
    }
    // power = (I + A)^k, starting from I.
    let mut power: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row = vec![0u64; words];
            row[i / 64] |= 1 << (i % 64);
            row
        })
        .collect();
    let mut out = BTreeMap::from([(start.to_string(), 0)]);
    for k in 1..=depth {
        let mut next = vec![vec![0u64; words]; n];
        for i in 0..n {
            for j in 0..n {
                if power[i][j / 64] >> (j % 64) & 1 == 1 {
                    for w in 0..words {
                        next[i][w] |= adj[j][w];
                    }
                }
            }
        }
        power = next;
        for j in 0..n {
            if power[0][j / 64] >> (j % 64) & 1 == 1 {
                out.entry(names[j].clone()).or_insert(k);
            }
        }
    }
    out
}
