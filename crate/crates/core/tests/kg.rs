mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::kg_check::{atom, check_all_classes, entity, lookup_medians, var};
use common::{rng, seeded_run, Fixture};
use rand::Rng;
use urbanedge_core::edge::PipelineKind;
use urbanedge_core::kg::{
    parse_ntriples, parse_query, run_query, write_ntriples, Aggregation, Class, Direction,
    KnowledgeGraph, Literal, Object, Query, QueryOutput, Seed, Term,
};

#[test]
fn every_query_class_matches_its_oracle_on_random_graphs() {
    let mut r = rng(77);
    for _ in 0..100 {
        let size = r.random_range(20..=10_000);
        let fx = Fixture::build(&mut r, size);
        check_all_classes(&fx, &mut r);
    }
}

#[test]
fn traversal_is_symmetric() {
    let mut r = rng(5);
    let fx = Fixture::build(&mut r, 2000);
    let g = fx.graph.state();
    for f in fx.facts.iter().filter(|f| matches!(f.o, Term::Entity(_))) {
        let Term::Entity(o) = &f.o else { unreachable!() };
        assert!(g.traverse(&f.s, &f.p, Direction::Out).contains(&f.o));
        assert!(g.traverse(o, &f.p, Direction::In).contains(&Term::entity(&f.s)));
    }
}

#[test]
fn hops_terminate_on_cycles() {
    let mut g = KnowledgeGraph::new(Seed::default_seed().ontology);
    let loc = |s: &str| Object::Entity(s.to_string(), Class::Location);
    g.assert("location/a", Class::Location, "adjacentTo", loc("location/b"), 0).unwrap();
    g.assert("location/b", Class::Location, "adjacentTo", loc("location/a"), 0).unwrap();
    let hops = g.state().multi_hop("location/a", &["adjacentTo"], 10);
    assert_eq!(hops, BTreeMap::from([("location/a".into(), 0), ("location/b".into(), 1)]));
    assert_eq!(
        g.state().multi_hop("location/a", &["adjacentTo"], 0),
        BTreeMap::from([("location/a".into(), 0)])
    );
}

#[test]
fn degenerate_queries() {
    let mut r = rng(9);
    let fx = Fixture::build(&mut r, 500);
    let g = fx.graph.state();
    assert!(g.lookup("nothing/here").is_empty());
    assert!(g.temporal_pattern(None, 10, 5, Aggregation::Count).unwrap().is_empty());
    let unsat = [atom(var("s"), "locatedAt", entity("location/999"))];
    assert!(g.cross_domain(&unsat).unwrap().is_empty());
    // A single atom is a traversal.
    let l = &fx.locations[0];
    let single: BTreeSet<Term> = g
        .cross_domain(&[atom(var("s"), "locatedAt", entity(l))])
        .unwrap()
        .into_iter()
        .map(|b| b["s"].clone())
        .collect();
    assert_eq!(single, g.traverse(l, "locatedAt", Direction::In));
    assert!(KnowledgeGraph::new(Seed::default_seed().ontology).is_empty());
}

#[test]
fn ill_typed_assertions_are_rejected() {
    let mut g = KnowledgeGraph::new(Seed::default_seed().ontology);
    let loc = Object::Entity("location/1".into(), Class::Location);
    assert!(g.assert("sensor/1/x", Class::Sensor, "flowsInto", loc.clone(), 0).is_err());
    assert!(g.assert("reading/1", Class::Event, "locatedAt", loc, 0).is_err());
    let real = Object::Literal(Literal::Real(1.0));
    assert!(g.assert("sensor/1/x", Class::Sensor, "reportedAt", real, 0).is_err());
    assert!(g.is_empty());
}

#[test]
fn lookup_latency_is_flat_in_graph_size() {
    let mut r = rng(11);
    let mut warm = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let fx = Fixture::build(&mut r, n);
        lookup_medians(&fx, &mut r);
        let (c, w) = lookup_medians(&fx, &mut r);
        println!("{n:>7} triples: lookup median {:.0} ns warm, {:.0} ns cold", w * 1e9, c * 1e9);
        warm.push(w);
    }
    let lo = warm.iter().cloned().fold(f64::MAX, f64::min);
    let hi = warm.iter().cloned().fold(0.0, f64::max);
    assert!(hi <= 2.0 * lo, "warm lookup medians {warm:?}");
}

#[test]
fn seeded_adaptive_graph_matches_recount() {
    let run = seeded_run();
    let res = run.get(PipelineKind::Adaptive).unwrap();
    let mut sensors = BTreeSet::new();
    let mut reported = BTreeSet::new();
    let mut readings = BTreeSet::new();
    let mut flagged = BTreeSet::new();
    for (p, d) in res.run.packets.iter().zip(&res.deliveries) {
        assert_eq!(p.id, d.packet_id);
        if d.delivered_at().is_none() {
            continue;
        }
        for item in &p.items {
            let r = &item.reading;
            sensors.insert((r.location, r.kind));
            reported.insert((r.location, r.kind, r.t));
            readings.insert(r.id);
            if item.flagged {
                flagged.insert(r.id);
            }
        }
    }
    let seed_facts = KnowledgeGraph::from_seed(&Seed::default_seed()).unwrap().len();
    // locatedAt and measures per sensor, reportedAt per sensor step,
    // producedBy and one value or status per reading, indicates per flag.
    let expected = seed_facts + 2 * sensors.len() + reported.len() + 2 * readings.len() + flagged.len();
    assert_eq!(res.graph.len(), expected);

    // Ingesting the same deliveries again adds nothing.
    let mut again = res.graph.clone();
    assert_eq!(again.ingest_delivered(&res.run, &res.deliveries).unwrap(), 0);
    assert_eq!(again.len(), res.graph.len());
}

#[test]
fn export_round_trip_preserves_triples_and_answers() {
    let run = seeded_run();
    let g = &run.get(PipelineKind::Adaptive).unwrap().graph;
    let mut buf = Vec::new();
    write_ntriples(g.state(), &mut buf).unwrap();
    let back = parse_ntriples(std::str::from_utf8(&buf).unwrap(), &Seed::default_seed().ontology).unwrap();
    let a: BTreeSet<_> = g.state().triples().collect();
    let b: BTreeSet<_> = back.state().triples().collect();
    assert_eq!(a, b);
    let sensor = g
        .state()
        .entities()
        .find(|(_, c)| *c == Class::Sensor)
        .map(|(id, _)| id.to_string())
        .unwrap();
    for text in [
        format!("lookup {sensor}"),
        format!("traverse {sensor} locatedAt out"),
        "traverse location/3 locatedAt in".to_string(),
        format!("hops {sensor} 3 locatedAt,partOf,adjacentTo"),
        "match ?s locatedAt ?l . ?l partOf district/central . ?r producedBy ?s . ?r indicates ?a".to_string(),
        "series vibration 0 8640 max".to_string(),
        "series * 0 8640 count".to_string(),
    ] {
        let q = parse_query(&text).unwrap();
        let here = run_query(g.state(), &q).unwrap();
        let there = run_query(back.state(), &q).unwrap();
        assert_eq!(here.render(), there.render(), "{text}");
        if let (Query::Series(..), QueryOutput::Series(s)) = (&q, &here) {
            assert!(!s.is_empty(), "{text}");
        }
    }
}
