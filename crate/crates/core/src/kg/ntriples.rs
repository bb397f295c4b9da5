//! N-Triples export with reified dimension and step annotations.
//!
//! Each entity is typed once on first appearance, each fact is written as a
//! plain triple, and a blank node per fact records its dimension and step.

use std::collections::HashMap;
use std::io::{self, Write};

use super::ontology::{Class, Ontology};
use super::store::{GraphState, KnowledgeGraph, Object};
use super::{Dimension, KgError, Literal, Term};

pub const IRI_PREFIX: &str = "urn:citytwin:";
const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

fn entity_iri(id: &str) -> String {
    format!("<{IRI_PREFIX}{id}>")
}

fn predicate_iri(p: &str) -> String {
    format!("<{IRI_PREFIX}rel/{p}>")
}

fn class_iri(c: Class) -> String {
    format!("<{IRI_PREFIX}class/{c}>")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Real(v) => format!("\"{v:?}\"^^<{XSD}double>"),
        Literal::Integer(v) => format!("\"{v}\"^^<{XSD}integer>"),
        Literal::Step(v) => format!("\"{v}\"^^<{IRI_PREFIX}type/step>"),
        Literal::Str(s) => format!("\"{}\"", escape(s)),
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Entity(e) => entity_iri(e),
        Term::Literal(l) => literal(l),
    }
}

/// Writes the graph in assertion order.
pub fn write_ntriples<W: Write>(g: &GraphState, mut out: W) -> io::Result<()> {
    let rdf_type = format!("<{RDF}type>");
    let mut typed = std::collections::HashSet::new();
    for (n, t) in g.triples().enumerate() {
        for e in [Some(t.subject.as_str()), t.object.as_entity()].into_iter().flatten() {
            if typed.insert(e.to_string()) {
                let c = g.class_of(e).expect("every entity has a class");
                writeln!(out, "{} {rdf_type} {} .", entity_iri(e), class_iri(c))?;
            }
        }
        let (s, p, o) = (entity_iri(&t.subject), predicate_iri(&t.predicate), term(&t.object));
        writeln!(out, "{s} {p} {o} .")?;
        let b = format!("_:a{n}");
        writeln!(out, "{b} <{RDF}subject> {s} .")?;
        writeln!(out, "{b} <{RDF}predicate> {p} .")?;
        writeln!(out, "{b} <{RDF}object> {o} .")?;
        writeln!(out, "{b} <{IRI_PREFIX}meta/dimension> \"{}\" .", t.dimension.name())?;
        writeln!(out, "{b} <{IRI_PREFIX}meta/step> {} .", literal(&Literal::Step(t.t)))?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Token {
    Iri(String),
    Blank(String),
    Lit(String, Option<String>),
}

fn parse_line(line: &str) -> Result<Vec<Token>, String> {
    let mut toks = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            ' ' | '\t' => {
                chars.next();
            }
            '.' => {
                chars.next();
                if chars.any(|(_, c)| !c.is_whitespace()) {
                    return Err("text after final '.'".into());
                }
                if toks.len() != 3 {
                    return Err(format!("expected 3 terms, found {}", toks.len()));
                }
                return Ok(toks);
            }
            '<' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '>')) => break,
                        Some((_, c)) => s.push(c),
                        None => return Err(format!("unterminated IRI at column {}", i + 1)),
                    }
                }
                toks.push(Token::Iri(s));
            }
            '_' => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                let name = s.strip_prefix("_:").ok_or(format!("bad blank node at column {}", i + 1))?;
                toks.push(Token::Blank(name.to_string()));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            _ => return Err(format!("bad escape in literal at column {}", i + 1)),
                        },
                        Some((_, c)) => s.push(c),
                        None => return Err(format!("unterminated literal at column {}", i + 1)),
                    }
                }
                let mut dt = None;
                if line[chars.peek().map_or(line.len(), |&(j, _)| j)..].starts_with("^^<") {
                    chars.next();
                    chars.next();
                    chars.next();
                    let mut d = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '>')) => break,
                            Some((_, c)) => d.push(c),
                            None => return Err("unterminated datatype".into()),
                        }
                    }
                    dt = Some(d);
                }
                toks.push(Token::Lit(s, dt));
            }
            _ => return Err(format!("unexpected {c:?} at column {}", i + 1)),
        }
    }
    Err("missing final '.'".into())
}

fn to_literal(s: &str, dt: Option<&str>) -> Result<Literal, String> {
    let bad = |e: &dyn std::fmt::Display| format!("bad literal {s:?}: {e}");
    let step_dt = format!("{IRI_PREFIX}type/step");
    match dt {
        None => Ok(Literal::Str(s.to_string())),
        Some(d) if d == format!("{XSD}double") => s.parse().map(Literal::Real).map_err(|e| bad(&e)),
        Some(d) if d == format!("{XSD}integer") => s.parse().map(Literal::Integer).map_err(|e| bad(&e)),
        Some(d) if d == step_dt => s.parse().map(Literal::Step).map_err(|e| bad(&e)),
        Some(d) => Err(format!("unknown datatype {d}")),
    }
}

fn strip<'a>(iri: &'a str, prefix: &str) -> Option<&'a str> {
    iri.strip_prefix(IRI_PREFIX)?.strip_prefix(prefix)
}

/// Rebuilds a graph from an export, re-checking every fact against `ontology`.
pub fn parse_ntriples(text: &str, ontology: &Ontology) -> Result<KnowledgeGraph, KgError> {
    let rdf_type = format!("{RDF}type");
    let mut classes: HashMap<String, Class> = HashMap::new();
    let mut facts: Vec<(usize, String, String, Token)> = Vec::new();
    let mut notes: HashMap<String, HashMap<String, Token>> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| KgError::Parse { line, message };
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let toks = parse_line(l).map_err(err)?;
        let [s, p, o]: [Token; 3] = toks.try_into().expect("three terms");
        let Token::Iri(p) = p else { return Err(err("predicate must be an IRI".into())) };
        match s {
            Token::Blank(b) => {
                notes.entry(b).or_default().insert(p, o);
            }
            Token::Iri(s) if p == rdf_type => {
                let id = strip(&s, "").ok_or_else(|| err(format!("foreign IRI {s}")))?;
                let Token::Iri(c) = o else { return Err(err("class must be an IRI".into())) };
                let class = strip(&c, "class/")
                    .and_then(Class::from_name)
                    .ok_or_else(|| err(format!("unknown class {c}")))?;
                classes.insert(id.to_string(), class);
            }
            Token::Iri(s) => {
                let id = strip(&s, "").ok_or_else(|| err(format!("foreign IRI {s}")))?;
                let pred = strip(&p, "rel/").ok_or_else(|| err(format!("foreign predicate {p}")))?;
                facts.push((line, id.to_string(), pred.to_string(), o));
            }
            Token::Lit(..) => return Err(err("subject cannot be a literal".into())),
        }
    }

    let mut meta: HashMap<(String, String, Token), (Dimension, u64)> = HashMap::new();
    for (b, fields) in notes {
        let err = |m: &str| KgError::Parse {
            line: 0,
            message: format!("annotation _:{b}: {m}"),
        };
        let get = |k: String| fields.get(&k).cloned().ok_or_else(|| err(&format!("missing {k}")));
        let Token::Iri(s) = get(format!("{RDF}subject"))? else { return Err(err("bad subject")) };
        let Token::Iri(p) = get(format!("{RDF}predicate"))? else { return Err(err("bad predicate")) };
        let o = get(format!("{RDF}object"))?;
        let Token::Lit(d, None) = get(format!("{IRI_PREFIX}meta/dimension"))? else {
            return Err(err("bad dimension"));
        };
        let Token::Lit(t, dt) = get(format!("{IRI_PREFIX}meta/step"))? else { return Err(err("bad step")) };
        let dim = Dimension::from_name(&d).ok_or_else(|| err("unknown dimension"))?;
        let Literal::Step(t) = to_literal(&t, dt.as_deref()).map_err(|m| err(&m))? else {
            return Err(err("step must be a step literal"));
        };
        let s = strip(&s, "").ok_or_else(|| err("foreign subject"))?.to_string();
        let p = strip(&p, "rel/").ok_or_else(|| err("foreign predicate"))?.to_string();
        meta.insert((s, p, o), (dim, t));
    }

    let mut g = KnowledgeGraph::new(ontology.clone());
    for (line, s, p, o) in facts {
        let err = |message: String| KgError::Parse { line, message };
        let &(dim, t) = meta
            .get(&(s.clone(), p.clone(), o.clone()))
            .ok_or_else(|| err("fact has no annotation".into()))?;
        let rel = ontology.relation(&p)?;
        if rel.dimension != dim {
            return Err(err(format!("{p} is {}, annotated {}", rel.dimension.name(), dim.name())));
        }
        let class_of = |id: &str| classes.get(id).copied().ok_or_else(|| err(format!("untyped entity {id}")));
        let object = match &o {
            Token::Iri(iri) => {
                let id = strip(iri, "").ok_or_else(|| err(format!("foreign IRI {iri}")))?;
                Object::Entity(id.to_string(), class_of(id)?)
            }
            Token::Lit(v, dt) => Object::Literal(to_literal(v, dt.as_deref()).map_err(err)?),
            Token::Blank(_) => return Err(err("object cannot be a blank node".into())),
        };
        g.assert(&s, class_of(&s)?, &p, object, t)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Seed;

    #[test]
    fn round_trip() {
        let seed = Seed::default_seed();
        let mut g = KnowledgeGraph::from_seed(&seed).unwrap();
        g.assert("reading/1", Class::Event, "hasValue", Object::Literal(Literal::Real(0.1 + 0.2)), 7)
            .unwrap();
        g.assert("reading/1", Class::Event, "hasStatus", Object::Literal(Literal::Str("a \"q\"\n".into())), 7)
            .unwrap();
        let mut buf = Vec::new();
        write_ntriples(g.state(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = parse_ntriples(&text, &seed.ontology).unwrap();
        assert_eq!(
            g.state().triples().collect::<Vec<_>>(),
            back.state().triples().collect::<Vec<_>>()
        );
        let mut again = Vec::new();
        write_ntriples(back.state(), &mut again).unwrap();
        assert_eq!(text.as_bytes(), again.as_slice());
    }

    #[test]
    fn reports_line() {
        let seed = Seed::default_seed();
        let e = parse_ntriples("<urn:citytwin:a> <urn:citytwin:rel/x> \"1\"", &seed.ontology).unwrap_err();
        assert!(matches!(e, KgError::Parse { line: 1, .. }));
    }
}
