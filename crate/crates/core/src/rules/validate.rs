use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::constraints::PhysicsConstraints;
use super::dsl::{Action, Condition, NumericField, Provenance, Rule, DEFAULT_TTL};
use crate::sensorgen::{CategorySet, SensorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RejectReason {
    LiteralOutOfBounds { kind: SensorKind, literal: f64 },
    RateExceedsMax { kind: SensorKind, literal: f64, max: f64 },
    RequiredTransmit { kind: SensorKind },
    InvalidLiteral { field: String, literal: f64 },
    DuplicateId,
}

impl RejectReason {
    /// Short stable reason string.
    pub fn label(&self) -> &'static str {
        match self {
            RejectReason::LiteralOutOfBounds { .. } => "literal outside physics bounds",
            RejectReason::RateExceedsMax { .. } => "rate threshold exceeds category max",
            RejectReason::RequiredTransmit { .. } => "required-transmit class",
            RejectReason::InvalidLiteral { .. } => "invalid literal",
            RejectReason::DuplicateId => "duplicate rule id",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::LiteralOutOfBounds { kind, literal } => {
                write!(f, "{} ({literal} for {kind})", self.label())
            }
            RejectReason::RateExceedsMax { kind, literal, max } => {
                write!(f, "{} ({literal} > {max} for {kind})", self.label())
            }
            RejectReason::RequiredTransmit { kind } => write!(f, "{} ({kind})", self.label()),
            RejectReason::InvalidLiteral { field, literal } => {
                write!(f, "{} ({field} = {literal})", self.label())
            }
            RejectReason::DuplicateId => f.write_str(self.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub rule: Rule,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationOutcome {
    pub accepted: Vec<Rule>,
    pub rejections: Vec<Rejection>,
}

/// Unconditional transmit rule for a required-transmit category.
pub fn floor_rule(kind: SensorKind) -> Rule {
    Rule {
        id: format!("floor-{}", kind.name()),
        conditions: vec![Condition::Category {
            name: kind.name().to_string(),
            set: CategorySet::single(kind),
        }],
        action: Action::Transmit,
        ttl: DEFAULT_TTL,
        provenance: Provenance {
            provider: "floor".into(),
            context_hash: String::new(),
        },
    }
}

fn check(rule: &Rule, c: &PhysicsConstraints) -> Option<RejectReason> {
    let scope = rule.categories();
    for cond in &rule.conditions {
        let Condition::Numeric { field, literal, .. } = cond else {
            continue;
        };
        let lit = *literal;
        let invalid = || {
            Some(RejectReason::InvalidLiteral {
                field: field.name().to_string(),
                literal: lit,
            })
        };
        if !lit.is_finite() {
            return invalid();
        }
        match field {
            NumericField::Value => {
                if let Some(kind) = scope.iter().find(|k| !c.get(*k).bounds().contains(lit)) {
                    return Some(RejectReason::LiteralOutOfBounds { kind, literal: lit });
                }
            }
            NumericField::Rate => {
                if let Some(kind) = scope.iter().find(|k| lit.abs() > c.get(*k).max_rate) {
                    return Some(RejectReason::RateExceedsMax {
                        kind,
                        literal: lit,
                        max: c.get(kind).max_rate,
                    });
                }
            }
            NumericField::ZScore | NumericField::Cross if lit < 0.0 => return invalid(),
            NumericField::Hour if !(0.0..=24.0).contains(&lit) => return invalid(),
            NumericField::Location if c.locations.is_some_and(|n| lit >= f64::from(n)) => {
                return invalid()
            }
            _ => {}
        }
    }
    if matches!(rule.action, Action::Drop | Action::Aggregate(_)) {
        if let Some(kind) = scope.intersect(c.required()).iter().next() {
            return Some(RejectReason::RequiredTransmit { kind });
        }
    }
    None
}

/// Splits candidates into accepted and rejected rules.
///
/// Floor rules for required-transmit categories are added when missing.
/// Accepted rules are ordered by descending specificity, then id.
pub fn validate_rules(candidates: Vec<Rule>, constraints: &PhysicsConstraints) -> ValidationOutcome {
    let mut out = ValidationOutcome::default();
    let mut ids = BTreeSet::new();
    for rule in candidates {
        if ids.contains(&rule.id) {
            out.rejections.push(Rejection {
                rule,
                reason: RejectReason::DuplicateId,
            });
            continue;
        }
        match check(&rule, constraints) {
            Some(reason) => out.rejections.push(Rejection { rule, reason }),
            None => {
                ids.insert(rule.id.clone());
                out.accepted.push(rule);
            }
        }
    }
    for kind in constraints.required().iter() {
        let floor = floor_rule(kind);
        if !ids.contains(&floor.id) {
            ids.insert(floor.id.clone());
            out.accepted.push(floor);
        }
    }
    out.accepted
        .sort_by(|a, b| b.specificity().cmp(&a.specificity()).then_with(|| a.id.cmp(&b.id)));
    out
}
