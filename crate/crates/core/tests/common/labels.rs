//! Structural checks on injected labels.

use std::collections::BTreeMap;

use urbanedge_core::anomaly::{ground_truth, AnomalyKind, InjectionConfig, InjectionReport};
use urbanedge_core::sensorgen::{SensorKind, SensorReading};


/// Checks the label structure against the untouched dataset.
pub fn check_structure(before: &[SensorReading], after: &[SensorReading], report: &InjectionReport, cfg: &InjectionConfig) {
    assert_eq!(before.len(), after.len());
    let n = before.len();
    let [g_lo, g_hi] = cfg.gap_range;

    // Position of each reading within its stream.
    let mut streams: BTreeMap<(u32, SensorKind), Vec<usize>> = BTreeMap::new();
    for (i, r) in after.iter().enumerate() {
        streams.entry(r.stream()).or_default().push(i);
    }
    for idx in streams.values_mut() {
        idx.sort_by_key(|&i| after[i].t);
    }
    let mut pos = vec![(0u32, SensorKind::Temperature, 0usize); n];
    for (key, idx) in &streams {
        for (p, &i) in idx.iter().enumerate() {
            pos[i] = (key.0, key.1, p);
        }
    }

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (a, b)) in after.iter().zip(before).enumerate() {
        assert_eq!((a.id, a.t, a.location, a.kind), (b.id, b.t, b.location, b.kind));
        match a.label {
            None => assert_eq!(a.value, b.value, "unlabeled reading {i} was modified"),
            Some(l) => {
                groups.entry(l.group).or_default().push(i);
                assert_eq!(l.kind == AnomalyKind::Missing, a.value.is_none(), "reading {i}");
                if l.kind != AnomalyKind::Missing {
                    assert!(!a.kind.is_binary(), "value anomaly on binary stream at {i}");
                }
            }
        }
    }
    let mut sizes: BTreeMap<AnomalyKind, Vec<usize>> = BTreeMap::new();
    for (g, members) in &groups {
        let kind = after[members[0]].label.unwrap().kind;
        assert!(members.iter().all(|&i| after[i].label.unwrap().kind == kind), "mixed group {g}");
        sizes.entry(kind).or_default().push(members.len());
        match kind {
            AnomalyKind::Point | AnomalyKind::Contextual => assert_eq!(members.len(), 1),
            AnomalyKind::Collective | AnomalyKind::Missing => {
                let (loc, k, start) = pos[members[0]];
                // A collective span needs two readings even when gaps may be single.
                let (lo, hi) = match kind {
                    AnomalyKind::Collective => (2, g_hi.max(2) as usize),
                    _ => (1, g_hi as usize),
                };
                assert!((lo..=hi).contains(&members.len()), "span {g} has {} members", members.len());
                for (off, &i) in members.iter().enumerate() {
                    assert_eq!(pos[i], (loc, k, start + off), "span {g} is not contiguous in one stream");
                }
            }
            AnomalyKind::CrossSensor => {
                assert!(members.len() >= 2);
                let cell = (after[members[0]].location, after[members[0]].t);
                assert!(members.iter().all(|&i| (after[i].location, after[i].t) == cell));
            }
        }
    }
    assert!(g_lo >= 1);
    assert_eq!(report.groups as usize, groups.len());

    let mask = ground_truth(after);
    let popcount = mask.iter().filter(|m| **m).count();
    assert_eq!(popcount, report.labeled);
    assert_eq!(popcount, report.target, "every planned anomaly is placed");
    let count = |k| report.by_kind.get(&k).copied().unwrap_or(0);
    assert_eq!(count(AnomalyKind::Missing), report.missing_points);
    assert_eq!(report.gap_lengths.iter().map(|&l| l as usize).sum::<usize>(), report.missing_points);
    assert_eq!(report.collective_lengths.iter().map(|&l| l as usize).sum::<usize>(), count(AnomalyKind::Collective));
    assert_eq!(report.point_deviations.len(), count(AnomalyKind::Point));
    for (kind, s) in &sizes {
        assert_eq!(s.iter().sum::<usize>(), count(*kind));
    }
    let [k_lo, _] = cfg.k_range;
    for d in &report.point_deviations {
        assert!(*d >= k_lo - 1e-9, "point deviation {d}σ below {k_lo}σ");
    }
}
