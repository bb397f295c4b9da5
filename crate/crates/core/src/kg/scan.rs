//! Index-free evaluation of every query class by scanning all triples.
//! Slow by design; the reference the indexed engine is measured against.

use std::collections::{BTreeMap, BTreeSet};

use super::query::{Aggregation, Atom, Binding, Direction, PatternTerm};
use super::store::GraphState;
use super::syntax::{Query, QueryOutput};
use super::{KgError, Literal, Term, Triple};

pub fn scan_query(g: &GraphState, q: &Query) -> Result<QueryOutput, KgError> {
    let all: Vec<Triple> = g.triples().collect();
    scan_query_in(g, &all, q)
}

/// As [`scan_query`] over triples already materialized from `g`.
pub fn scan_query_in(g: &GraphState, all: &[Triple], q: &Query) -> Result<QueryOutput, KgError> {
    Ok(match q {
        Query::Lookup(e) => QueryOutput::Triples(all.iter().filter(|t| &t.subject == e).cloned().collect()),
        Query::Traverse(e, p, dir) => {
            let mut out = BTreeSet::new();
            for t in all.iter().filter(|t| &t.predicate == p) {
                match dir {
                    Direction::Out if &t.subject == e => {
                        out.insert(t.object.clone());
                    }
                    Direction::In if t.object.as_entity() == Some(e) => {
                        out.insert(Term::Entity(t.subject.clone()));
                    }
                    _ => {}
                }
            }
            QueryOutput::Terms(out.into_iter().collect())
        }
        Query::Hops(start, depth, preds) => {
            let mut hops = BTreeMap::from([(start.clone(), 0usize)]);
            let mut layer = BTreeSet::from([start.clone()]);
            for d in 1..=*depth {
                let mut next = BTreeSet::new();
                for t in all.iter().filter(|t| preds.contains(&t.predicate) && layer.contains(&t.subject)) {
                    if let Some(o) = t.object.as_entity() {
                        if !hops.contains_key(o) {
                            hops.insert(o.to_string(), d);
                            next.insert(o.to_string());
                        }
                    }
                }
                layer = next;
            }
            QueryOutput::Hops(hops.into_iter().collect())
        }
        Query::Match(atoms) => QueryOutput::Bindings(scan_match(g, all, atoms)?),
        Query::Series(cat, from, to, agg) => QueryOutput::Series(scan_series(all, cat.as_deref(), *from, *to, *agg)?),
    })
}

fn scan_match(g: &GraphState, all: &[Triple], atoms: &[Atom]) -> Result<Vec<Binding>, KgError> {
    for a in atoms {
        g.ontology().relation(&a.predicate)?;
    }
    if atoms.is_empty() {
        return Ok(Vec::new());
    }
    let mut bindings = vec![Binding::new()];
    for a in atoms {
        let mut next = Vec::new();
        for b in &bindings {
            for t in all.iter().filter(|t| t.predicate == a.predicate) {
                let mut nb = b.clone();
                let s = Term::Entity(t.subject.clone());
                if unify(&a.subject, &s, &mut nb) && unify(&a.object, &t.object, &mut nb) {
                    next.push(nb);
                }
            }
        }
        bindings = next;
    }
    let set: BTreeSet<Binding> = bindings.into_iter().collect();
    Ok(set.into_iter().collect())
}

fn unify(p: &PatternTerm, value: &Term, b: &mut Binding) -> bool {
    match p {
        PatternTerm::Const(c) => c == value,
        PatternTerm::Var(v) => match b.get(v) {
            Some(prev) => prev == value,
            None => {
                b.insert(v.clone(), value.clone());
                true
            }
        },
    }
}

fn scan_series(
    all: &[Triple],
    cat: Option<&str>,
    from: u64,
    to: u64,
    agg: Aggregation,
) -> Result<Vec<(u64, f64)>, KgError> {
    let lookup = |s: &str, p: &str| all.iter().find(|t| t.subject == s && t.predicate == p).map(|t| t.object.clone());
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for t in all.iter().filter(|t| t.predicate == "hasValue" && (from..=to).contains(&t.t)) {
        if let Some(c) = cat {
            let sensor = lookup(&t.subject, "producedBy");
            let measured = sensor.as_ref().and_then(Term::as_entity).and_then(|s| lookup(s, "measures"));
            if measured != Some(Term::Literal(Literal::Str(c.to_string()))) {
                continue;
            }
        }
        match &t.object {
            Term::Literal(Literal::Real(v)) => groups.entry(t.t).or_default().push(*v),
            Term::Literal(l) => {
                return Err(KgError::TypeMismatch {
                    left: l.kind(),
                    right: super::LiteralType::Real,
                })
            }
            Term::Entity(_) => {}
        }
    }
    Ok(groups
        .into_iter()
        .map(|(t, vs)| {
            let v = match agg {
                Aggregation::Count => vs.len() as f64,
                Aggregation::Mean => vs.iter().sum::<f64>() / vs.len() as f64,
                Aggregation::Max => vs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            (t, v)
        })
        .collect())
}
