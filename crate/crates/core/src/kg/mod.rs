//! Streaming in-memory knowledge graph over delivered readings.
//!
//! Triples carry one ontology dimension and the step they refer to. The
//! store keeps subject, object, predicate and (dimension, step) indices, and
//! ingestion is idempotent: re-asserting a triple is a no-op.

mod ntriples;
mod ontology;
mod query;
mod scan;
mod store;
mod syntax;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::ntriples::{parse_ntriples, write_ntriples, IRI_PREFIX};
pub use self::ontology::{check_id, Class, Ontology, Range, Relation, Seed, SeedFact, DEFAULT_ONTOLOGY};
pub use self::query::{Aggregation, Atom, Binding, Direction, PatternTerm};
pub use self::scan::{scan_query, scan_query_in};
pub use self::store::{GraphState, KnowledgeGraph, Object};
pub use self::syntax::{parse_query, run_query, Query, QueryOutput, QuerySyntaxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Spatial,
    Temporal,
    Causal,
    Administrative,
    Functional,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Spatial,
        Dimension::Temporal,
        Dimension::Causal,
        Dimension::Administrative,
        Dimension::Functional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Spatial => "spatial",
            Dimension::Temporal => "temporal",
            Dimension::Causal => "causal",
            Dimension::Administrative => "administrative",
            Dimension::Functional => "functional",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Dimension::ALL.into_iter().find(|d| d.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LiteralType {
    Real,
    Integer,
    Step,
    Str,
}

impl LiteralType {
    pub fn name(self) -> &'static str {
        match self {
            LiteralType::Real => "real",
            LiteralType::Integer => "integer",
            LiteralType::Step => "step",
            LiteralType::Str => "string",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [LiteralType::Real, LiteralType::Integer, LiteralType::Step, LiteralType::Str]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

/// A typed literal. Reals must be finite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Literal {
    Real(f64),
    Integer(i64),
    Step(u64),
    Str(String),
}

impl Literal {
    pub fn kind(&self) -> LiteralType {
        match self {
            Literal::Real(_) => LiteralType::Real,
            Literal::Integer(_) => LiteralType::Integer,
            Literal::Step(_) => LiteralType::Step,
            Literal::Str(_) => LiteralType::Str,
        }
    }

    /// Orders two literals of the same type; mixing types is an error.
    pub fn compare(&self, other: &Literal) -> Result<Ordering, KgError> {
        match (self, other) {
            (Literal::Real(a), Literal::Real(b)) => Ok(a.total_cmp(b)),
            (Literal::Integer(a), Literal::Integer(b)) => Ok(a.cmp(b)),
            (Literal::Step(a), Literal::Step(b)) => Ok(a.cmp(b)),
            (Literal::Str(a), Literal::Str(b)) => Ok(a.cmp(b)),
            _ => Err(KgError::TypeMismatch {
                left: self.kind(),
                right: other.kind(),
            }),
        }
    }

    fn rank(&self) -> u8 {
        self.kind() as u8
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Literal {}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare(other).unwrap_or_else(|_| self.rank().cmp(&other.rank()))
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Literal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Literal::Real(v) => v.to_bits().hash(state),
            Literal::Integer(v) => v.hash(state),
            Literal::Step(v) => v.hash(state),
            Literal::Str(v) => v.hash(state),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Real(v) => write!(f, "{v}"),
            Literal::Integer(v) => write!(f, "{v}"),
            Literal::Step(v) => write!(f, "@{v}"),
            Literal::Str(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Entity(String),
    Literal(Literal),
}

impl Term {
    pub fn entity(id: impl Into<String>) -> Self {
        Term::Entity(id.into())
    }

    pub fn as_entity(&self) -> Option<&str> {
        match self {
            Term::Entity(e) => Some(e),
            Term::Literal(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Entity(e) => f.write_str(e),
            Term::Literal(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
    pub dimension: Dimension,
    /// Step the assertion refers to.
    pub t: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum KgError {
    #[error("unregistered predicate {0}")]
    UnregisteredPredicate(String),
    #[error("{predicate} expects {expected}, got {found}")]
    ClassMismatch {
        predicate: String,
        expected: String,
        found: String,
    },
    #[error("entity {entity} used as {first} and as {second}")]
    ConflictingClass { entity: String, first: Class, second: Class },
    #[error("cannot compare {} with {}", left.name(), right.name())]
    TypeMismatch { left: LiteralType, right: LiteralType },
    #[error("invalid entity id {0:?}")]
    InvalidId(String),
    #[error("real literals must be finite")]
    NonFinite,
    #[error("ontology: {0}")]
    Ontology(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn sensor_id(location: u32, category: &str) -> String {
    format!("sensor/{location}/{category}")
}

pub fn location_id(location: u32) -> String {
    format!("location/{location}")
}

pub fn reading_id(id: u64) -> String {
    format!("reading/{id}")
}

pub fn anomaly_id(reading: u64) -> String {
    format!("anomaly/{reading}")
}
