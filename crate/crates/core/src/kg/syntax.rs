//! A small line-oriented query language over the graph.
//!
//! ```text
//! lookup <entity>
//! traverse <entity> <predicate> [out|in]
//! hops <entity> <depth> <predicate>[,<predicate>...]
//! match <s> <p> <o> [. <s> <p> <o> ...]
//! series <category|*> <from> <to> <count|mean|max>
//! ```
//!
//! In `match`, `?name` is a variable, `"text"` a string literal, `@12` a
//! step literal, a number a real literal, and anything else an entity id.

use std::fmt::Write as _;

use thiserror::Error;

use super::query::{Aggregation, Atom, Binding, Direction, PatternTerm};
use super::store::GraphState;
use super::{KgError, Literal, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct QuerySyntaxError {
    /// 1-based.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Lookup(String),
    Traverse(String, String, Direction),
    Hops(String, usize, Vec<String>),
    Match(Vec<Atom>),
    Series(Option<String>, u64, u64, Aggregation),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutput {
    Triples(Vec<Triple>),
    Terms(Vec<Term>),
    Hops(Vec<(String, usize)>),
    Bindings(Vec<Binding>),
    Series(Vec<(u64, f64)>),
}

impl QueryOutput {
    /// One result per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        match self {
            QueryOutput::Triples(ts) => {
                for t in ts {
                    let _ = writeln!(s, "{} {} {} [{} @{}]", t.subject, t.predicate, t.object, t.dimension.name(), t.t);
                }
            }
            QueryOutput::Terms(ts) => {
                for t in ts {
                    let _ = writeln!(s, "{t}");
                }
            }
            QueryOutput::Hops(hs) => {
                for (e, d) in hs {
                    let _ = writeln!(s, "{e} {d}");
                }
            }
            QueryOutput::Bindings(bs) => {
                for b in bs {
                    let row: Vec<String> = b.iter().map(|(k, v)| format!("?{k}={v}")).collect();
                    let _ = writeln!(s, "{}", row.join(" "));
                }
            }
            QueryOutput::Series(xs) => {
                for (t, v) in xs {
                    let _ = writeln!(s, "{t} {v}");
                }
            }
        }
        s
    }
}

struct Tok<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(input: &str) -> Result<Vec<Tok<'_>>, QuerySyntaxError> {
    let mut out = Vec::new();
    let bytes = input.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if bytes[i] == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            if i == bytes.len() {
                return Err(QuerySyntaxError {
                    column: start + 1,
                    message: "unterminated string".into(),
                });
            }
            i += 1;
        } else {
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
        }
        out.push(Tok {
            text: &input[start..i],
            column: start + 1,
        });
    }
    Ok(out)
}

fn pattern_term(t: &Tok<'_>) -> Result<PatternTerm, QuerySyntaxError> {
    let err = |m: &str| QuerySyntaxError {
        column: t.column,
        message: m.to_string(),
    };
    let s = t.text;
    Ok(if let Some(v) = s.strip_prefix('?') {
        if v.is_empty() {
            return Err(err("empty variable name"));
        }
        PatternTerm::Var(v.to_string())
    } else if let Some(inner) = s.strip_prefix('"') {
        PatternTerm::Const(Term::Literal(Literal::Str(inner.trim_end_matches('"').to_string())))
    } else if let Some(step) = s.strip_prefix('@') {
        PatternTerm::Const(Term::Literal(Literal::Step(step.parse().map_err(|_| err("bad step literal"))?)))
    } else if s.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
        PatternTerm::Const(Term::Literal(Literal::Real(s.parse().map_err(|_| err("bad number"))?)))
    } else {
        PatternTerm::Const(Term::Entity(s.to_string()))
    })
}

pub fn parse_query(input: &str) -> Result<Query, QuerySyntaxError> {
    let toks = tokenize(input)?;
    let end = input.len() + 1;
    let at = |i: usize| toks.get(i).map_or(end, |t| t.column);
    let err = |column: usize, message: String| QuerySyntaxError { column, message };
    let need = |i: usize, what: &str| {
        toks.get(i)
            .map(|t| t.text)
            .ok_or_else(|| err(at(i), format!("expected {what}")))
    };
    let done = |n: usize| {
        if toks.len() > n {
            Err(err(toks[n].column, format!("unexpected {:?}", toks[n].text)))
        } else {
            Ok(())
        }
    };
    let number = |i: usize, what: &str| -> Result<u64, QuerySyntaxError> {
        need(i, what)?.parse().map_err(|_| err(at(i), format!("expected {what}")))
    };
    let verb = need(0, "a query verb")?;
    match verb {
        "lookup" => {
            let e = need(1, "an entity id")?;
            done(2)?;
            Ok(Query::Lookup(e.into()))
        }
        "traverse" => {
            let e = need(1, "an entity id")?;
            let p = need(2, "a predicate")?;
            let dir = match toks.get(3).map(|t| t.text) {
                None | Some("out") => Direction::Out,
                Some("in") => Direction::In,
                Some(other) => return Err(err(at(3), format!("expected out or in, found {other:?}"))),
            };
            done(4)?;
            Ok(Query::Traverse(e.into(), p.into(), dir))
        }
        "hops" => {
            let e = need(1, "an entity id")?;
            let d = number(2, "a depth")? as usize;
            let ps: Vec<String> = need(3, "predicates")?.split(',').map(str::to_string).collect();
            if ps.iter().any(String::is_empty) {
                return Err(err(at(3), "empty predicate in list".into()));
            }
            done(4)?;
            Ok(Query::Hops(e.into(), d, ps))
        }
        "match" => {
            let mut atoms = Vec::new();
            let mut i = 1;
            loop {
                if toks.len() < i + 3 {
                    return Err(err(at(toks.len()), "expected subject predicate object".into()));
                }
                let p = &toks[i + 1];
                if p.text.starts_with(['?', '"', '@']) {
                    return Err(err(p.column, "predicate must be a name".into()));
                }
                atoms.push(Atom {
                    subject: pattern_term(&toks[i])?,
                    predicate: p.text.to_string(),
                    object: pattern_term(&toks[i + 2])?,
                });
                i += 3;
                match toks.get(i) {
                    None => break,
                    Some(t) if t.text == "." => i += 1,
                    Some(t) => return Err(err(t.column, format!("expected '.', found {:?}", t.text))),
                }
            }
            Ok(Query::Match(atoms))
        }
        "series" => {
            let c = need(1, "a category or *")?;
            let from = number(2, "a start step")?;
            let to = number(3, "an end step")?;
            let agg = Aggregation::from_name(need(4, "count, mean or max")?)
                .ok_or_else(|| err(at(4), "expected count, mean or max".into()))?;
            done(5)?;
            Ok(Query::Series((c != "*").then(|| c.to_string()), from, to, agg))
        }
        other => Err(err(
            toks[0].column,
            format!("unknown verb {other:?}; expected lookup, traverse, hops, match or series"),
        )),
    }
}

pub fn run_query(g: &GraphState, q: &Query) -> Result<QueryOutput, KgError> {
    Ok(match q {
        Query::Lookup(e) => QueryOutput::Triples(g.lookup(e)),
        Query::Traverse(e, p, d) => QueryOutput::Terms(g.traverse(e, p, *d).into_iter().collect()),
        Query::Hops(e, d, ps) => {
            let ps: Vec<&str> = ps.iter().map(String::as_str).collect();
            QueryOutput::Hops(g.multi_hop(e, &ps, *d).into_iter().collect())
        }
        Query::Match(atoms) => QueryOutput::Bindings(g.cross_domain(atoms)?),
        Query::Series(c, from, to, agg) => QueryOutput::Series(g.temporal_pattern(c.as_deref(), *from, *to, *agg)?),
    })
}
