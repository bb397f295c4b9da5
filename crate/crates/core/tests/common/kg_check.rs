//! Full-scan oracles for the five graph query classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use rand::Rng;
use urbanedge_core::kg::{Aggregation, Atom, Binding, Direction, KnowledgeGraph, Literal, PatternTerm, Term};

use super::{reachability_by_powers, Fact, Fixture, CATEGORIES};

pub fn var(v: &str) -> PatternTerm {
    PatternTerm::Var(v.to_string())
}

pub fn entity(e: &str) -> PatternTerm {
    PatternTerm::Const(Term::entity(e))
}

pub fn atom(s: PatternTerm, p: &str, o: PatternTerm) -> Atom {
    Atom {
        subject: s,
        predicate: p.to_string(),
        object: o,
    }
}

pub fn oracle_lookup(facts: &[Fact], e: &str) -> Vec<(String, String, Term, u64)> {
    let mut v: Vec<_> = facts
        .iter()
        .filter(|f| f.s == e)
        .map(|f| (f.s.clone(), f.p.clone(), f.o.clone(), f.t))
        .collect();
    v.sort();
    v
}

pub fn oracle_traverse(facts: &[Fact], e: &str, p: &str, dir: Direction) -> BTreeSet<Term> {
    facts
        .iter()
        .filter(|f| f.p == p)
        .filter_map(|f| match dir {
            Direction::Out if f.s == e => Some(f.o.clone()),
            Direction::In if f.o == Term::entity(e) => Some(Term::entity(&f.s)),
            _ => None,
        })
        .collect()
}

/// Every assignment of facts to atoms, kept when shared variables agree.
pub fn oracle_match(facts: &[Fact], atoms: &[Atom]) -> BTreeSet<Binding> {
    fn bind(p: &PatternTerm, v: &Term, b: &mut Binding) -> bool {
        match p {
            PatternTerm::Const(c) => c == v,
            PatternTerm::Var(name) => match b.get(name) {
                Some(old) => old == v,
                None => {
                    b.insert(name.clone(), v.clone());
                    true
                }
            },
        }
    }
    fn go(facts: &[Fact], atoms: &[Atom], b: Binding, out: &mut BTreeSet<Binding>) {
        let Some((first, rest)) = atoms.split_first() else {
            out.insert(b);
            return;
        };
        for f in facts.iter().filter(|f| f.p == first.predicate) {
            let mut nb = b.clone();
            if bind(&first.subject, &Term::entity(&f.s), &mut nb) && bind(&first.object, &f.o, &mut nb) {
                go(facts, rest, nb, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    if !atoms.is_empty() {
        go(facts, atoms, Binding::new(), &mut out);
    }
    out
}

pub fn oracle_series(facts: &[Fact], cat: Option<&str>, from: u64, to: u64, agg: Aggregation) -> Vec<(u64, f64)> {
    let mut sensor_of = HashMap::new();
    let mut category_of = HashMap::new();
    for f in facts {
        match (f.p.as_str(), &f.o) {
            ("producedBy", Term::Entity(s)) => {
                sensor_of.insert(f.s.clone(), s.clone());
            }
            ("measures", Term::Literal(Literal::Str(c))) => {
                category_of.insert(f.s.clone(), c.clone());
            }
            _ => {}
        }
    }
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for f in facts.iter().filter(|f| f.p == "hasValue" && f.t >= from && f.t <= to) {
        let c = sensor_of.get(&f.s).and_then(|s| category_of.get(s));
        if cat.is_some_and(|want| c.map(String::as_str) != Some(want)) {
            continue;
        }
        if let Term::Literal(Literal::Real(v)) = f.o {
            groups.entry(f.t).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(t, vs)| {
            let v = match agg {
                Aggregation::Count => vs.len() as f64,
                Aggregation::Mean => vs.iter().sum::<f64>() / vs.len() as f64,
                Aggregation::Max => vs.iter().cloned().fold(f64::MIN, f64::max),
            };
            (t, v)
        })
        .collect()
}

pub fn sorted_lookup(g: &KnowledgeGraph, e: &str) -> Vec<(String, String, Term, u64)> {
    let mut v: Vec<_> = g
        .state()
        .lookup(e)
        .into_iter()
        .map(|t| (t.subject, t.predicate, t.object, t.t))
        .collect();
    v.sort();
    v
}

pub fn pick<'a>(r: &mut impl Rng, v: &'a [String]) -> &'a str {
    &v[r.random_range(0..v.len())]
}

pub fn check_all_classes(fx: &Fixture, r: &mut impl Rng) {
    let g = fx.graph.state();
    assert_eq!(g.len(), fx.facts.len());
    let everything: Vec<String> = fx
        .locations
        .iter()
        .chain(&fx.sensors)
        .chain(&fx.readings)
        .cloned()
        .chain(["absent/entity".to_string()])
        .collect();
    let preds = ["locatedAt", "partOf", "adjacentTo", "producedBy", "indicates"];
    for _ in 0..5 {
        let e = pick(r, &everything);
        assert_eq!(sorted_lookup(&fx.graph, e), oracle_lookup(&fx.facts, e), "lookup {e}");

        let p = preds[r.random_range(0..preds.len())];
        for dir in [Direction::Out, Direction::In] {
            assert_eq!(g.traverse(e, p, dir), oracle_traverse(&fx.facts, e, p, dir), "traverse {e} {p} {dir:?}");
        }

        let hop_preds: Vec<&str> = preds.iter().copied().filter(|_| r.random_bool(0.6)).collect();
        let depth = r.random_range(0..6);
        let start = if r.random_bool(0.5) { pick(r, &fx.sensors) } else { pick(r, &fx.locations) };
        assert_eq!(
            g.multi_hop(start, &hop_preds, depth),
            reachability_by_powers(&fx.facts, start, &hop_preds, depth),
            "hops {start} {depth} {hop_preds:?}"
        );

        let loc = pick(r, &fx.locations).to_string();
        let cat = CATEGORIES[r.random_range(0..CATEGORIES.len())];
        let patterns = [
            vec![atom(var("s"), "locatedAt", var("l")), atom(var("l"), "partOf", var("d"))],
            vec![atom(var("r"), "producedBy", var("s")), atom(var("s"), "locatedAt", entity(&loc))],
            vec![
                atom(var("r"), "indicates", var("a")),
                atom(var("r"), "producedBy", var("s")),
                atom(var("s"), "measures", PatternTerm::Const(Term::Literal(Literal::Str(cat.into())))),
            ],
            vec![atom(var("a"), "adjacentTo", var("b")), atom(var("b"), "adjacentTo", var("a"))],
            vec![atom(entity(&loc), "partOf", var("x"))],
        ];
        let pattern = &patterns[r.random_range(0..patterns.len())];
        let got: BTreeSet<Binding> = g.cross_domain(pattern).unwrap().into_iter().collect();
        assert_eq!(got, oracle_match(&fx.facts, pattern), "match {pattern:?}");

        let from = r.random_range(0..220);
        let to = from + r.random_range(0..80);
        let cat = if r.random_bool(0.3) { None } else { Some(cat) };
        for agg in [Aggregation::Count, Aggregation::Mean, Aggregation::Max] {
            let got = g.temporal_pattern(cat, from, to, agg).unwrap();
            let want = oracle_series(&fx.facts, cat, from, to, agg);
            assert_eq!(got.len(), want.len(), "series {cat:?} {from}..{to} {agg:?}");
            for ((ta, va), (tb, vb)) in got.iter().zip(&want) {
                assert_eq!(ta, tb);
                assert!((va - vb).abs() <= 1e-12 * vb.abs().max(1.0), "{va} vs {vb}");
            }
        }
    }
}

/// Median seconds per lookup of a random reading. Cold samples look up a
/// fresh entity each time; warm samples repeat one entity after touching it
/// once, which takes cache capacity out of the measurement.
pub fn lookup_medians(fx: &Fixture, r: &mut impl Rng) -> (f64, f64) {
    let g = fx.graph.state();
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let cold = (0..101)
        .map(|_| {
            let ids: Vec<&str> = (0..200).map(|_| pick(r, &fx.readings)).collect();
            let start = Instant::now();
            for id in ids {
                std::hint::black_box(g.lookup(id));
            }
            start.elapsed().as_secs_f64() / 200.0
        })
        .collect();
    let warm = (0..301)
        .map(|_| {
            let id = pick(r, &fx.readings);
            assert!(!g.lookup(id).is_empty());
            let start = Instant::now();
            for _ in 0..50 {
                std::hint::black_box(g.lookup(std::hint::black_box(id)));
            }
            start.elapsed().as_secs_f64() / 50.0
        })
        .collect();
    (median(cold), median(warm))
}
