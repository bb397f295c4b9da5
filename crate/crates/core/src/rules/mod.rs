//! Context-driven rule generation and validation.
//!
//! One regeneration cycle encodes a recent window into a [`ContextVector`],
//! asks a [`RuleProvider`] for rule text, parses it, validates it against
//! [`PhysicsConstraints`], and publishes the result as an immutable
//! [`RuleSet`] snapshot.

mod constraints;
mod context;
mod dsl;
mod provider;
mod validate;

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

pub use self::constraints::{CategoryConstraint, PhysicsConstraints};
pub use self::context::{
    build_context, combine, ContextVector, ContextWeights, ScoredObservation, CONTEXT_DIM, SHORT_HISTORY_SLOT,
};
pub use self::dsl::{
    parse_rules, parse_rules_from, Action, Comparator, Condition, Features, NumericField, ParseError,
    ParseErrorKind, ParseErrors, Provenance, Rule, DEFAULT_TTL,
};
pub use self::provider::{
    CycleOutcome, DefaultPolicy, DeterministicProvider, ExternalProvider, ExternalTransport, ProviderError,
    RuleProvider, RuleRequest,
};
pub use self::validate::{floor_rule, validate_rules, RejectReason, Rejection, ValidationOutcome};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("context window is empty")]
    EmptyWindow,
    #[error("history depth must be at least 1")]
    ZeroHistoryDepth,
    #[error("context is not finite")]
    NonFiniteContext,
    #[error("{0}")]
    Parse(#[from] ParseErrors),
}

/// Default history depth in steps.
pub const DEFAULT_HISTORY_DEPTH: usize = 12;

/// An ordered, validated rule list evaluated first-match.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    /// First rule matching `f`, plus the number of conditions checked.
    pub fn evaluate(&self, f: &Features) -> (Option<&Rule>, u64) {
        let mut checked = 0;
        let hit = self.rules.iter().find(|r| r.matches_counted(f, &mut checked));
        (hit, checked)
    }

    pub fn render(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }
}

/// Candidate rules from one provider call.
#[derive(Debug, Clone)]
pub struct Generation {
    pub candidates: Vec<Rule>,
    pub provider: String,
    /// Why the primary provider's answer was discarded, if it was.
    pub fallback: Option<String>,
}

/// Asks `provider` for candidates, falling back to `fallback` on any
/// transport or parse failure. Candidates are not validated here.
pub fn generate_rules(
    ctx: &ContextVector,
    history: &[CycleOutcome],
    constraints: &PhysicsConstraints,
    provider: &dyn RuleProvider,
    fallback: &DeterministicProvider,
    ttl: u64,
) -> Result<Generation, RuleError> {
    if !ctx.is_finite() {
        return Err(RuleError::NonFiniteContext);
    }
    let req = RuleRequest {
        context: ctx,
        history,
        constraints,
    };
    let primary = provider
        .respond(&req)
        .map_err(|e| e.to_string())
        .and_then(|text| parse_rules_from(&text, provider.name()).map_err(|e| e.to_string()));
    let (mut candidates, name, reason) = match primary {
        Ok(rules) => (rules, provider.name().to_string(), None),
        Err(reason) => {
            let text = fallback.respond(&req).expect("deterministic provider is infallible");
            (parse_rules_from(&text, fallback.name())?, fallback.name().to_string(), Some(reason))
        }
    };
    let hash = ctx.snapshot_hash();
    for r in &mut candidates {
        r.ttl = ttl;
        r.provenance = Provenance {
            provider: name.clone(),
            context_hash: hash.clone(),
        };
    }
    Ok(Generation {
        candidates,
        provider: name,
        fallback: reason,
    })
}

/// Runs regeneration cycles and holds the current snapshot.
pub struct RuleEngine {
    provider: Box<dyn RuleProvider>,
    fallback: DeterministicProvider,
    pub constraints: PhysicsConstraints,
    pub weights: ContextWeights,
    pub history_depth: usize,
    pub ttl: u64,
    snapshot: Arc<RuleSet>,
    history: VecDeque<CycleOutcome>,
    pub fallbacks: u64,
    pub cycles: u64,
    pub rules_generated: u64,
    pub rejected_total: u64,
    pub last_rejections: Vec<Rejection>,
}

impl RuleEngine {
    pub fn new(
        provider: Box<dyn RuleProvider>,
        policy: DefaultPolicy,
        constraints: PhysicsConstraints,
        weights: ContextWeights,
        history_depth: usize,
        ttl: u64,
    ) -> Self {
        let floors = validate_rules(Vec::new(), &constraints).accepted;
        Self {
            provider,
            fallback: DeterministicProvider { policy },
            constraints,
            weights,
            history_depth,
            ttl,
            snapshot: Arc::new(RuleSet::new(floors)),
            history: VecDeque::new(),
            fallbacks: 0,
            cycles: 0,
            rules_generated: 0,
            rejected_total: 0,
            last_rejections: Vec::new(),
        }
    }

    pub fn deterministic(constraints: PhysicsConstraints) -> Self {
        Self::new(
            Box::new(DeterministicProvider::default()),
            DefaultPolicy::default(),
            constraints,
            ContextWeights::default(),
            DEFAULT_HISTORY_DEPTH,
            DEFAULT_TTL,
        )
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn snapshot(&self) -> Arc<RuleSet> {
        Arc::clone(&self.snapshot)
    }

    /// Appends one cycle's outcome, keeping the last `history_depth`.
    pub fn record_outcome(&mut self, outcome: CycleOutcome) {
        self.history.push_back(outcome);
        while self.history.len() > self.history_depth {
            self.history.pop_front();
        }
    }

    /// Builds a context from `window`, regenerates, validates and swaps in the
    /// new snapshot.
    pub fn regenerate(&mut self, window: &[ScoredObservation]) -> Result<Arc<RuleSet>, RuleError> {
        let ctx = build_context(window, &self.constraints, &self.weights, self.history_depth)?;
        let history: Vec<CycleOutcome> = self.history.iter().cloned().collect();
        let generation = generate_rules(
            &ctx,
            &history,
            &self.constraints,
            self.provider.as_ref(),
            &self.fallback,
            self.ttl,
        )?;
        if generation.fallback.is_some() {
            self.fallbacks += 1;
        }
        self.cycles += 1;
        self.rules_generated += generation.candidates.len() as u64;
        let outcome = validate_rules(generation.candidates, &self.constraints);
        self.rejected_total += outcome.rejections.len() as u64;
        self.last_rejections = outcome.rejections;
        self.snapshot = Arc::new(RuleSet::new(outcome.accepted));
        Ok(self.snapshot())
    }
}
