//! An independent rule checker plus random rule text and contexts.

use proptest::prelude::*;
use rand::Rng;
use urbanedge_core::rules::{
    parse_rules, Action, Condition, ContextVector, ContextWeights, CycleOutcome, Features, NumericField,
    PhysicsConstraints, Rule, CONTEXT_DIM,
};
use urbanedge_core::sensorgen::{Family, SensorKind};

use super::rng;

pub fn scope_of(rule: &Rule) -> Vec<SensorKind> {
    let names: Vec<&str> = rule
        .conditions
        .iter()
        .filter_map(|c| match c {
            Condition::Category { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    SensorKind::ALL
        .into_iter()
        .filter(|k| {
            names.iter().all(|n| {
                *n == k.name() || *n == k.family().name() || (*n == "cctv" && k.family() == Family::CctvMetadata)
            })
        })
        .collect()
}

/// Why `rule` breaks the constraints, if it does.
pub fn violation(rule: &Rule, c: &PhysicsConstraints) -> Option<String> {
    let scope = scope_of(rule);
    for cond in &rule.conditions {
        let Condition::Numeric { field, literal, .. } = cond else {
            continue;
        };
        let x = *literal;
        let bad = match field {
            NumericField::Value => scope.iter().any(|k| x < c.get(*k).min || x > c.get(*k).max),
            NumericField::Rate => scope.iter().any(|k| x.abs() > c.get(*k).max_rate),
            NumericField::ZScore | NumericField::Cross => x < 0.0,
            NumericField::Hour => !(0.0..=24.0).contains(&x),
            NumericField::Location => c.locations.is_some_and(|n| x >= f64::from(n)),
        };
        if bad || !x.is_finite() {
            return Some(format!("{field:?} literal {x}"));
        }
    }
    let sheds = matches!(rule.action, Action::Drop | Action::Aggregate(_));
    if sheds && scope.iter().any(|k| c.get(*k).required_transmit) {
        return Some("sheds a required-transmit category".into());
    }
    None
}

// Random rule text.

pub fn category_name(r: &mut impl Rng) -> &'static str {
    if r.random_bool(0.7) {
        SensorKind::ALL[r.random_range(0..SensorKind::ALL.len())].name()
    } else {
        Family::ALL[r.random_range(0..Family::ALL.len())].name()
    }
}

pub fn literal(r: &mut impl Rng, field: NumericField, c: &PhysicsConstraints) -> f64 {
    let round = |x: f64| (x * 100.0).round() / 100.0;
    round(match field {
        NumericField::Value => {
            let k = SensorKind::ALL[r.random_range(0..SensorKind::ALL.len())];
            let b = c.get(k);
            if r.random_bool(0.6) {
                r.random_range(b.min..=b.max)
            } else {
                r.random_range(-2000.0..2000.0)
            }
        }
        NumericField::Rate => {
            let k = SensorKind::ALL[r.random_range(0..SensorKind::ALL.len())];
            r.random_range(-1.5..1.5) * c.get(k).max_rate
        }
        NumericField::ZScore => r.random_range(-1.0..6.0),
        NumericField::Hour => r.random_range(-2.0..26.0),
        NumericField::Location => f64::from(r.random_range(0..40u32)),
        NumericField::Cross => f64::from(r.random_range(-1..5i32)),
    })
}

pub const FIELDS: [NumericField; 6] = [
    NumericField::Location,
    NumericField::Value,
    NumericField::ZScore,
    NumericField::Rate,
    NumericField::Hour,
    NumericField::Cross,
];

pub fn rule_line(r: &mut impl Rng, id: usize, c: &PhysicsConstraints) -> String {
    let mut conds = Vec::new();
    for _ in 0..r.random_range(0..=2) {
        conds.push(format!("category={}", category_name(r)));
    }
    for _ in 0..r.random_range(0..=3) {
        let field = FIELDS[r.random_range(0..FIELDS.len())];
        let op = ["=", "<", ">", "<=", ">="][r.random_range(0..5)];
        conds.push(format!("{}{op}{}", field.name(), literal(r, field, c)));
    }
    if r.random_bool(0.2) {
        conds.push(format!("gap={}", r.random_range(0..=1)));
    }
    if conds.is_empty() {
        conds.push(format!("category={}", category_name(r)));
    }
    let action = match r.random_range(0..4) {
        0 => "transmit".to_string(),
        1 => "drop".to_string(),
        2 => format!("aggregate({})", r.random_range(2..=16)),
        _ => "escalate".to_string(),
    };
    // Occasional repeated ids.
    let id = if r.random_bool(0.1) { id / 2 } else { id };
    format!("r{id}: WHEN {} THEN {action}", conds.join(" AND "))
}

pub fn random_rules(seed: u64) -> (Vec<Rule>, PhysicsConstraints) {
    let mut r = rng(seed);
    let mut c = PhysicsConstraints::default();
    if r.random_bool(0.5) {
        c.locations = Some(r.random_range(1..30));
    }
    let n = r.random_range(1..=25);
    let text: String = (0..n).map(|i| rule_line(&mut r, i, &c) + "\n").collect();
    (parse_rules(&text).expect("generated rule text parses"), c)
}

pub fn emergency_features(r: &mut impl Rng) -> Features {
    let opt = |r: &mut dyn rand::RngCore, lo: f64, hi: f64| r.random_bool(0.8).then(|| r.random_range(lo..hi));
    Features {
        kind: SensorKind::EmergencyAlert,
        location: r.random_range(0..40),
        value: if r.random_bool(0.9) {
            Some(f64::from(r.random_range(0..=1u8)))
        } else {
            None
        },
        zscore: opt(r, 0.0, 30.0),
        rate: opt(r, -2.0, 2.0),
        hour: r.random_range(0.0..24.0),
        gap: r.random_bool(0.3),
        cross: r.random_range(0..6),
    }
}

pub fn random_context(r: &mut impl Rng, w: &ContextWeights) -> ContextVector {
    let mut v = |lo: f64, hi: f64| (0..CONTEXT_DIM).map(|_| r.random_range(lo..hi)).collect::<Vec<_>>();
    let s = v(-6.0, 6.0);
    let e = v(-3.0, 3.0);
    let mut h = v(-2.0, 4.0);
    h[CONTEXT_DIM - 1] = if r.random_bool(0.3) { 1.0 } else { 0.0 };
    let mut p = vec![0.0; CONTEXT_DIM];
    p[SensorKind::EmergencyAlert.index()] = 1.0;
    ContextVector::from_parts(s, e, h, p, w)
}

pub fn random_history(r: &mut impl Rng) -> Vec<CycleOutcome> {
    (0..r.random_range(0..4))
        .map(|_| {
            let mut o = CycleOutcome::new();
            for k in SensorKind::ALL {
                for _ in 0..r.random_range(0..20) {
                    o.record(k, r.random_bool(0.4));
                }
            }
            o
        })
        .collect()
}

pub fn weights(a: [f64; 4]) -> ContextWeights {
    ContextWeights {
        alpha: a[0],
        beta: a[1],
        gamma: a[2],
        delta: a[3],
    }
}

pub fn vec16() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, CONTEXT_DIM)
}

pub fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())))
}
