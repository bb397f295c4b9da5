use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::ontology::{Class, Ontology, Range, Seed};
use super::{anomaly_id, check_id, location_id, reading_id, sensor_id, Dimension, KgError, Literal, Term, Triple};
use crate::edge::{EdgeRun, Packet};
use crate::sensorgen::SensorReading;
use crate::transport::DeliveryRecord;

/// The object side of an assertion.
#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Entity(String, Class),
    Literal(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct Stored {
    pub s: u32,
    pub p: u32,
    pub o: u32,
    pub dimension: Dimension,
    pub t: u64,
}

/// An immutable view of the graph; queries run against this.
#[derive(Debug, Clone)]
pub struct GraphState {
    pub(super) ontology: Ontology,
    pub(super) terms: Vec<Term>,
    pub(super) term_ids: HashMap<Term, u32>,
    pub(super) predicates: Vec<String>,
    pub(super) predicate_ids: HashMap<String, u32>,
    pub(super) classes: HashMap<u32, Class>,
    /// Entities in first-seen order.
    pub(super) entity_order: Vec<u32>,
    pub(super) triples: Vec<Stored>,
    pub(super) set: HashMap<(u32, u32, u32), u32>,
    pub(super) by_subject: HashMap<u32, Vec<u32>>,
    pub(super) by_object: HashMap<u32, Vec<u32>>,
    pub(super) by_predicate: HashMap<u32, Vec<u32>>,
    pub(super) by_dimension_t: BTreeMap<(Dimension, u64), Vec<u32>>,
}

impl GraphState {
    fn new(ontology: Ontology) -> Self {
        Self {
            ontology,
            terms: Vec::new(),
            term_ids: HashMap::new(),
            predicates: Vec::new(),
            predicate_ids: HashMap::new(),
            classes: HashMap::new(),
            entity_order: Vec::new(),
            triples: Vec::new(),
            set: HashMap::new(),
            by_subject: HashMap::new(),
            by_object: HashMap::new(),
            by_predicate: HashMap::new(),
            by_dimension_t: BTreeMap::new(),
        }
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub(super) fn term_id(&self, t: &Term) -> Option<u32> {
        self.term_ids.get(t).copied()
    }

    pub(super) fn entity_term(&self, id: &str) -> Option<u32> {
        self.term_id(&Term::Entity(id.to_string()))
    }

    pub(super) fn predicate_id(&self, p: &str) -> Option<u32> {
        self.predicate_ids.get(p).copied()
    }

    pub(super) fn materialize(&self, s: &Stored) -> Triple {
        Triple {
            subject: self.terms[s.s as usize].to_string(),
            predicate: self.predicates[s.p as usize].clone(),
            object: self.terms[s.o as usize].clone(),
            dimension: s.dimension,
            t: s.t,
        }
    }

    /// Every triple in assertion order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|s| self.materialize(s))
    }

    pub fn class_of(&self, id: &str) -> Option<Class> {
        self.entity_term(id).and_then(|t| self.classes.get(&t).copied())
    }

    /// Entities with their classes, in first-seen order.
    pub fn entities(&self) -> impl Iterator<Item = (&str, Class)> + '_ {
        self.entity_order.iter().map(|&t| {
            let id = self.terms[t as usize].as_entity().expect("entity term");
            (id, self.classes[&t])
        })
    }

    pub fn contains(&self, s: &str, p: &str, o: &Term) -> bool {
        match (self.entity_term(s), self.predicate_id(p), self.term_id(o)) {
            (Some(s), Some(p), Some(o)) => self.set.contains_key(&(s, p, o)),
            _ => false,
        }
    }

    fn intern(&mut self, t: Term) -> u32 {
        if let Some(&id) = self.term_ids.get(&t) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(t.clone());
        self.term_ids.insert(t, id);
        id
    }

    fn intern_predicate(&mut self, p: &str) -> u32 {
        if let Some(&id) = self.predicate_ids.get(p) {
            return id;
        }
        let id = self.predicates.len() as u32;
        self.predicates.push(p.to_string());
        self.predicate_ids.insert(p.to_string(), id);
        id
    }

    fn check_class(&self, id: &str, class: Class) -> Result<(), KgError> {
        check_id(id)?;
        match self.class_of(id) {
            Some(prev) if prev != class => Err(KgError::ConflictingClass {
                entity: id.to_string(),
                first: prev,
                second: class,
            }),
            _ => Ok(()),
        }
    }

    fn declare(&mut self, id: &str, class: Class) -> u32 {
        let t = self.intern(Term::Entity(id.to_string()));
        if self.classes.insert(t, class).is_none() {
            self.entity_order.push(t);
        }
        t
    }

    fn assert(&mut self, s: &str, s_class: Class, p: &str, o: Object, t: u64) -> Result<bool, KgError> {
        let rel = *self.ontology.relation(p)?;
        if s_class != rel.domain {
            return Err(KgError::ClassMismatch {
                predicate: p.to_string(),
                expected: rel.domain.to_string(),
                found: s_class.to_string(),
            });
        }
        self.check_class(s, s_class)?;
        match (&o, rel.range) {
            (Object::Entity(id, c), Range::Entity(want)) if *c == want => self.check_class(id, *c)?,
            (Object::Literal(l), Range::Literal(want)) if l.kind() == want => {
                if matches!(l, Literal::Real(v) if !v.is_finite()) {
                    return Err(KgError::NonFinite);
                }
            }
            _ => {
                let found = match &o {
                    Object::Entity(_, c) => c.to_string(),
                    Object::Literal(l) => l.kind().name().to_string(),
                };
                return Err(KgError::ClassMismatch {
                    predicate: p.to_string(),
                    expected: rel.range.to_string(),
                    found,
                });
            }
        }

        let s_id = self.declare(s, s_class);
        let p_id = self.intern_predicate(p);
        let o_id = match o {
            Object::Entity(id, c) => self.declare(&id, c),
            Object::Literal(l) => self.intern(Term::Literal(l)),
        };
        if self.set.contains_key(&(s_id, p_id, o_id)) {
            return Ok(false);
        }
        let idx = self.triples.len() as u32;
        self.triples.push(Stored {
            s: s_id,
            p: p_id,
            o: o_id,
            dimension: rel.dimension,
            t,
        });
        self.set.insert((s_id, p_id, o_id), idx);
        self.by_subject.entry(s_id).or_default().push(idx);
        self.by_object.entry(o_id).or_default().push(idx);
        self.by_predicate.entry(p_id).or_default().push(idx);
        self.by_dimension_t.entry((rel.dimension, t)).or_default().push(idx);
        Ok(true)
    }
}

/// Single-writer graph handing out immutable snapshots to readers.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    state: Arc<GraphState>,
}

impl KnowledgeGraph {
    pub fn new(ontology: Ontology) -> Self {
        Self {
            state: Arc::new(GraphState::new(ontology)),
        }
    }

    /// An empty graph over the seed's ontology, with its facts loaded at step 0.
    pub fn from_seed(seed: &Seed) -> Result<Self, KgError> {
        let mut g = Self::new(seed.ontology.clone());
        for f in &seed.facts {
            g.assert(
                &f.subject,
                f.subject_class,
                &f.predicate,
                Object::Entity(f.object.clone(), f.object_class),
                0,
            )?;
        }
        Ok(g)
    }

    /// A consistent view as of now; later writes do not affect it.
    pub fn snapshot(&self) -> Arc<GraphState> {
        Arc::clone(&self.state)
    }

    pub fn state(&self) -> &GraphState {
        &self.state
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    /// Asserts one triple after checking it against the relation registry.
    /// Returns whether it was new.
    pub fn assert(&mut self, s: &str, s_class: Class, p: &str, o: Object, t: u64) -> Result<bool, KgError> {
        Arc::make_mut(&mut self.state).assert(s, s_class, p, o, t)
    }

    /// Triples for one delivered reading; returns how many were new.
    pub fn ingest_reading(&mut self, r: &SensorReading, flagged: bool) -> Result<usize, KgError> {
        let sensor = sensor_id(r.location, r.kind.name());
        let reading = reading_id(r.id);
        let mut added = 0;
        let mut put = |g: &mut Self, s: &str, c: Class, p: &str, o: Object| -> Result<(), KgError> {
            added += usize::from(g.assert(s, c, p, o, r.t)?);
            Ok(())
        };
        put(self, &sensor, Class::Sensor, "locatedAt", Object::Entity(location_id(r.location), Class::Location))?;
        put(self, &sensor, Class::Sensor, "measures", Object::Literal(Literal::Str(r.kind.name().into())))?;
        put(self, &sensor, Class::Sensor, "reportedAt", Object::Literal(Literal::Step(r.t)))?;
        put(self, &reading, Class::Event, "producedBy", Object::Entity(sensor.clone(), Class::Sensor))?;
        match r.value {
            Some(v) => put(self, &reading, Class::Event, "hasValue", Object::Literal(Literal::Real(v)))?,
            None => put(self, &reading, Class::Event, "hasStatus", Object::Literal(Literal::Str("missing".into())))?,
        }
        if flagged {
            put(self, &reading, Class::Event, "indicates", Object::Entity(anomaly_id(r.id), Class::Event))?;
        }
        Ok(added)
    }

    pub fn ingest_packet(&mut self, p: &Packet) -> Result<usize, KgError> {
        let mut added = 0;
        for item in &p.items {
            added += self.ingest_reading(&item.reading, item.flagged)?;
        }
        Ok(added)
    }

    /// Ingests the delivered packets of a run in arrival order.
    pub fn ingest_delivered(&mut self, run: &EdgeRun, deliveries: &[DeliveryRecord]) -> Result<usize, KgError> {
        let mut arrived: Vec<(u64, u64, &Packet)> = run
            .packets
            .iter()
            .zip(deliveries)
            .filter_map(|(p, d)| d.delivered_at().map(|t| (t, p.id, p)))
            .collect();
        arrived.sort_by_key(|&(t, id, _)| (t, id));
        let mut added = 0;
        for (_, _, p) in arrived {
            added += self.ingest_packet(p)?;
        }
        Ok(added)
    }
}
