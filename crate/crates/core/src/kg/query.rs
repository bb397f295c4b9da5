use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::store::{GraphState, Stored};
use super::{Dimension, KgError, Literal, Term, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// From subject to object.
    Out,
    /// From object back to subject.
    In,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

/// One `subject predicate object` pattern of a conjunctive query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub subject: PatternTerm,
    pub predicate: String,
    pub object: PatternTerm,
}

pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Count,
    Mean,
    Max,
}

impl Aggregation {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "count" => Some(Aggregation::Count),
            "mean" => Some(Aggregation::Mean),
            "max" => Some(Aggregation::Max),
            _ => None,
        }
    }
}

impl GraphState {
    fn stored<'a>(&'a self, idx: &'a [u32]) -> impl Iterator<Item = &'a Stored> + 'a {
        idx.iter().map(|&i| &self.triples[i as usize])
    }

    /// Outgoing edges and attributes of `entity`; empty when absent.
    pub fn lookup(&self, entity: &str) -> Vec<Triple> {
        let Some(idx) = self.entity_term(entity).and_then(|s| self.by_subject.get(&s)) else {
            return Vec::new();
        };
        self.stored(idx)
            .map(|t| Triple {
                subject: entity.to_string(),
                predicate: self.predicates[t.p as usize].clone(),
                object: self.terms[t.o as usize].clone(),
                dimension: t.dimension,
                t: t.t,
            })
            .collect()
    }

    /// Neighbours one hop along `predicate`.
    pub fn traverse(&self, entity: &str, predicate: &str, dir: Direction) -> BTreeSet<Term> {
        let (Some(e), Some(p)) = (self.entity_term(entity), self.predicate_id(predicate)) else {
            return BTreeSet::new();
        };
        let index = match dir {
            Direction::Out => &self.by_subject,
            Direction::In => &self.by_object,
        };
        let Some(idx) = index.get(&e) else { return BTreeSet::new() };
        self.stored(idx)
            .filter(|t| t.p == p)
            .map(|t| {
                let other = if dir == Direction::Out { t.o } else { t.s };
                self.terms[other as usize].clone()
            })
            .collect()
    }

    /// Entities reachable from `start` along outgoing `predicates` edges in at
    /// most `depth` hops, with their shortest hop count.
    pub fn multi_hop(&self, start: &str, predicates: &[&str], depth: usize) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        out.insert(start.to_string(), 0);
        let Some(s) = self.entity_term(start) else { return out };
        let preds: BTreeSet<u32> = predicates.iter().filter_map(|p| self.predicate_id(p)).collect();
        let mut hops: BTreeMap<u32, usize> = BTreeMap::from([(s, 0)]);
        let mut frontier = VecDeque::from([s]);
        while let Some(e) = frontier.pop_front() {
            let d = hops[&e];
            if d == depth {
                continue;
            }
            for t in self.by_subject.get(&e).map(|i| self.stored(i)).into_iter().flatten() {
                if !preds.contains(&t.p) || self.terms[t.o as usize].as_entity().is_none() {
                    continue;
                }
                if let std::collections::btree_map::Entry::Vacant(v) = hops.entry(t.o) {
                    v.insert(d + 1);
                    frontier.push_back(t.o);
                }
            }
        }
        for (t, d) in hops {
            out.insert(self.terms[t as usize].to_string(), d);
        }
        out
    }

    /// All bindings satisfying every atom, sorted. Atoms are joined on shared
    /// variables, most-constrained first.
    pub fn cross_domain(&self, pattern: &[Atom]) -> Result<Vec<Binding>, KgError> {
        for a in pattern {
            self.ontology.relation(&a.predicate)?;
        }
        let mut bindings: Vec<Binding> = vec![Binding::new()];
        let mut remaining: Vec<&Atom> = pattern.iter().collect();
        while !remaining.is_empty() && !bindings.is_empty() {
            let bound = |pt: &PatternTerm, b: &Binding| match pt {
                PatternTerm::Const(_) => true,
                PatternTerm::Var(v) => b.contains_key(v),
            };
            let sample = &bindings[0];
            let pick = (0..remaining.len())
                .max_by_key(|&i| {
                    let a = remaining[i];
                    (usize::from(bound(&a.subject, sample)) * 2 + usize::from(bound(&a.object, sample)), usize::MAX - i)
                })
                .expect("non-empty");
            let atom = remaining.remove(pick);
            let mut next = Vec::new();
            for b in &bindings {
                self.extend(atom, b, &mut next);
            }
            bindings = next;
        }
        if pattern.is_empty() {
            return Ok(Vec::new());
        }
        let set: BTreeSet<Binding> = bindings.into_iter().collect();
        Ok(set.into_iter().collect())
    }

    fn resolve(pt: &PatternTerm, b: &Binding) -> Option<Term> {
        match pt {
            PatternTerm::Const(t) => Some(t.clone()),
            PatternTerm::Var(v) => b.get(v).cloned(),
        }
    }

    fn extend(&self, atom: &Atom, b: &Binding, out: &mut Vec<Binding>) {
        let Some(p) = self.predicate_id(&atom.predicate) else { return };
        let s_val = Self::resolve(&atom.subject, b);
        let o_val = Self::resolve(&atom.object, b);
        let id_of = |t: &Option<Term>| t.as_ref().map(|t| self.term_id(t));
        let (s_id, o_id) = (id_of(&s_val), id_of(&o_val));
        // A bound term that never occurs in the graph matches nothing.
        if matches!(s_id, Some(None)) || matches!(o_id, Some(None)) {
            return;
        }
        let (s_id, o_id) = (s_id.flatten(), o_id.flatten());
        let candidates: &[u32] = match (s_id, o_id) {
            (Some(s), _) => self.by_subject.get(&s).map_or(&[], Vec::as_slice),
            (None, Some(o)) => self.by_object.get(&o).map_or(&[], Vec::as_slice),
            (None, None) => self.by_predicate.get(&p).map_or(&[], Vec::as_slice),
        };
        for t in self.stored(candidates) {
            if t.p != p || s_id.is_some_and(|s| s != t.s) || o_id.is_some_and(|o| o != t.o) {
                continue;
            }
            let mut nb = b.clone();
            let mut ok = true;
            for (pt, id) in [(&atom.subject, t.s), (&atom.object, t.o)] {
                if let PatternTerm::Var(v) = pt {
                    let term = &self.terms[id as usize];
                    match nb.get(v) {
                        Some(prev) if prev != term => ok = false,
                        Some(_) => {}
                        None => {
                            nb.insert(v.clone(), term.clone());
                        }
                    }
                }
            }
            if ok {
                out.push(nb);
            }
        }
    }

    /// Per-step aggregate of reading values over `[from, to]`, optionally for
    /// one sensor category. Steps without readings are omitted.
    pub fn temporal_pattern(
        &self,
        category: Option<&str>,
        from: u64,
        to: u64,
        agg: Aggregation,
    ) -> Result<Vec<(u64, f64)>, KgError> {
        if from > to {
            return Ok(Vec::new());
        }
        let Some(has_value) = self.predicate_id("hasValue") else { return Ok(Vec::new()) };
        let produced_by = self.predicate_id("producedBy");
        let measures = self.predicate_id("measures");
        let want = category.map(|c| Term::Literal(Literal::Str(c.to_string())));
        let category_of = |reading: u32| -> Option<u32> {
            let sensor = self
                .stored(self.by_subject.get(&reading)?)
                .find(|t| Some(t.p) == produced_by)?
                .o;
            Some(self.stored(self.by_subject.get(&sensor)?).find(|t| Some(t.p) == measures)?.o)
        };
        let mut out = Vec::new();
        for (&(_, t), idx) in self
            .by_dimension_t
            .range((Dimension::Functional, from)..=(Dimension::Functional, to))
        {
            let mut acc: Option<Literal> = None;
            let (mut n, mut sum) = (0u64, 0.0);
            for s in self.stored(idx).filter(|s| s.p == has_value) {
                if let Some(w) = &want {
                    if category_of(s.s).map(|c| &self.terms[c as usize]) != Some(w) {
                        continue;
                    }
                }
                let Term::Literal(lit) = &self.terms[s.o as usize] else { continue };
                let Literal::Real(v) = lit else {
                    return Err(KgError::TypeMismatch {
                        left: lit.kind(),
                        right: super::LiteralType::Real,
                    });
                };
                n += 1;
                sum += v;
                acc = Some(match acc {
                    Some(a) if a.compare(lit)?.is_ge() => a,
                    _ => lit.clone(),
                });
            }
            if n == 0 {
                continue;
            }
            let value = match agg {
                Aggregation::Count => n as f64,
                Aggregation::Mean => sum / n as f64,
                Aggregation::Max => match acc {
                    Some(Literal::Real(v)) => v,
                    _ => unreachable!("max of reals"),
                },
            };
            out.push((t, value));
        }
        Ok(out)
    }
}
