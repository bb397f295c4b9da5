use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dimension, KgError, LiteralType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Sensor,
    Location,
    Event,
    Policy,
    Service,
    Road,
    VehicleClass,
    InfrastructureAsset,
}

impl Class {
    pub const ALL: [Class; 8] = [
        Class::Sensor,
        Class::Location,
        Class::Event,
        Class::Policy,
        Class::Service,
        Class::Road,
        Class::VehicleClass,
        Class::InfrastructureAsset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Class::Sensor => "Sensor",
            Class::Location => "Location",
            Class::Event => "Event",
            Class::Policy => "Policy",
            Class::Service => "Service",
            Class::Road => "Road",
            Class::VehicleClass => "VehicleClass",
            Class::InfrastructureAsset => "InfrastructureAsset",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Class::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a relation points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Range {
    Entity(Class),
    Literal(LiteralType),
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Range::Entity(c) => write!(f, "{c}"),
            Range::Literal(t) => write!(f, "{}", t.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relation {
    pub domain: Class,
    pub range: Range,
    pub dimension: Dimension,
}

/// Entity classes plus the relation registry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ontology {
    relations: BTreeMap<String, Relation>,
}

impl Ontology {
    /// Registers `name`; each predicate may be registered once.
    pub fn register(&mut self, name: &str, rel: Relation) -> Result<(), KgError> {
        if self.relations.contains_key(name) {
            return Err(KgError::Ontology(format!("predicate {name} registered twice")));
        }
        check_id(name)?;
        self.relations.insert(name.to_string(), rel);
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Result<&Relation, KgError> {
        self.relations
            .get(name)
            .ok_or_else(|| KgError::UnregisteredPredicate(name.to_string()))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// Entity ids become IRI suffixes, so they are kept to a safe alphabet.
pub fn check_id(id: &str) -> Result<(), KgError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/' | ':'));
    if ok {
        Ok(())
    } else {
        Err(KgError::InvalidId(id.to_string()))
    }
}

/// One seed fact with its endpoints' classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFact {
    pub subject: String,
    pub subject_class: Class,
    pub predicate: String,
    pub object: String,
    pub object_class: Class,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyFile {
    relations: Vec<RelationEntry>,
    #[serde(default)]
    districts: Vec<DistrictEntry>,
    #[serde(default)]
    entities: Vec<EntityEntry>,
    #[serde(default)]
    facts: Vec<FactEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationEntry {
    name: String,
    domain: String,
    range: String,
    dimension: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistrictEntry {
    id: String,
    /// Half-open range of location indices.
    locations: [u32; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityEntry {
    id: String,
    class: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactEntry {
    subject: String,
    predicate: String,
    object: String,
}

/// A parsed ontology file: registry plus administrative seed facts.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub ontology: Ontology,
    pub facts: Vec<SeedFact>,
}

pub const DEFAULT_ONTOLOGY: &str = include_str!("../../assets/ontology.toml");

fn parse_class(s: &str) -> Result<Class, KgError> {
    Class::from_name(s).ok_or_else(|| KgError::Ontology(format!("unknown class {s}")))
}

impl Seed {
    pub fn default_seed() -> Self {
        Self::parse(DEFAULT_ONTOLOGY).expect("bundled ontology is valid")
    }

    pub fn parse(text: &str) -> Result<Self, KgError> {
        let file: OntologyFile = toml::from_str(text).map_err(|e| KgError::Ontology(e.to_string()))?;
        let mut ontology = Ontology::default();
        for r in &file.relations {
            let range = match LiteralType::from_name(&r.range) {
                Some(t) => Range::Literal(t),
                None => Range::Entity(parse_class(&r.range)?),
            };
            let dimension = Dimension::from_name(&r.dimension)
                .ok_or_else(|| KgError::Ontology(format!("unknown dimension {}", r.dimension)))?;
            ontology.register(
                &r.name,
                Relation {
                    domain: parse_class(&r.domain)?,
                    range,
                    dimension,
                },
            )?;
        }

        let mut classes: BTreeMap<String, Class> = BTreeMap::new();
        let mut declare = |id: &str, class: Class| -> Result<(), KgError> {
            check_id(id)?;
            match classes.insert(id.to_string(), class) {
                Some(prev) if prev != class => Err(KgError::ConflictingClass {
                    entity: id.to_string(),
                    first: prev,
                    second: class,
                }),
                _ => Ok(()),
            }
        };
        for d in &file.districts {
            declare(&d.id, Class::Location)?;
        }
        for e in &file.entities {
            declare(&e.id, parse_class(&e.class)?)?;
        }

        let mut facts = Vec::new();
        let mut seen = HashSet::new();
        for d in &file.districts {
            let [lo, hi] = d.locations;
            if lo > hi {
                return Err(KgError::Ontology(format!("district {} has an empty location range", d.id)));
            }
            for i in lo..hi {
                facts.push(SeedFact {
                    subject: super::location_id(i),
                    subject_class: Class::Location,
                    predicate: "partOf".into(),
                    object: d.id.clone(),
                    object_class: Class::Location,
                });
            }
        }
        for f in &file.facts {
            let class_of = |id: &str| {
                classes
                    .get(id)
                    .copied()
                    .or_else(|| id.starts_with("location/").then_some(Class::Location))
                    .ok_or_else(|| KgError::Ontology(format!("fact mentions undeclared entity {id}")))
            };
            let fact = SeedFact {
                subject: f.subject.clone(),
                subject_class: class_of(&f.subject)?,
                predicate: f.predicate.clone(),
                object: f.object.clone(),
                object_class: class_of(&f.object)?,
            };
            if seen.insert((f.subject.clone(), f.predicate.clone(), f.object.clone())) {
                facts.push(fact);
            }
        }
        Ok(Self { ontology, facts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_seed_parses() {
        let s = Seed::default_seed();
        for p in ["locatedAt", "reportedAt", "hasValue", "indicates", "producedBy", "partOf"] {
            assert!(s.ontology.relation(p).is_ok(), "{p}");
        }
        assert!(!s.facts.is_empty());
    }

    #[test]
    fn duplicate_predicate_rejected() {
        let text = r#"
[[relations]]
name = "a"
domain = "Sensor"
range = "Location"
dimension = "spatial"
[[relations]]
name = "a"
domain = "Sensor"
range = "Location"
dimension = "spatial"
"#;
        assert!(matches!(Seed::parse(text), Err(KgError::Ontology(_))));
    }
}
