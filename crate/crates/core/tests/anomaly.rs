mod common;

use common::labels::check_structure;
use common::rng;
use proptest::prelude::*;
use rand::Rng;
use urbanedge_core::anomaly::{ground_truth, inject, AnomalyKind, InjectError, InjectionConfig, InjectionReport};
use urbanedge_core::sensorgen::{generate_dataset, DatasetConfig, Dataset, SensorReading};

fn dataset(cfg: &DatasetConfig, seed: u64) -> Dataset {
    generate_dataset(cfg, seed).unwrap()
}

fn run(ds: &Dataset, cfg: &InjectionConfig, seed: u64) -> Result<(Vec<SensorReading>, InjectionReport), InjectError> {
    inject(ds.readings.clone(), cfg, &ds.generators, &ds.clock, seed)
}

#[test]
fn default_rate_is_met_across_seeds() {
    let cfg = InjectionConfig::default();
    for seed in 42..48 {
        let ds = dataset(&DatasetConfig::default(), seed);
        let (after, report) = run(&ds, &cfg, seed).unwrap();
        check_structure(&ds.readings, &after, &report, &cfg);
        let rate = report.labeled as f64 / after.len() as f64;
        assert!((rate - cfg.rate).abs() <= 0.005, "seed {seed}: rate {rate}");
        let missing = after.iter().filter(|r| r.value.is_none()).count() as f64 / after.len() as f64;
        assert!((missing - cfg.missing_rate).abs() <= 0.001, "seed {seed}: missing {missing}");
        for k in [AnomalyKind::Point, AnomalyKind::Contextual, AnomalyKind::Collective, AnomalyKind::CrossSensor] {
            assert!(report.by_kind.get(&k).copied().unwrap_or(0) > 0, "seed {seed}: no {k:?}");
        }
    }
}

#[test]
fn point_anomalies_sit_at_least_five_sigma_out() {
    let ds = dataset(&DatasetConfig::default(), 9);
    let cfg = InjectionConfig {
        rate: 0.1,
        ..InjectionConfig::default()
    };
    let (after, report) = run(&ds, &cfg, 9).unwrap();
    check_structure(&ds.readings, &after, &report, &cfg);
    assert!(report.point_deviations.len() > 100);
    assert!(report.point_deviations.iter().all(|d| (5.0 - 1e-9..).contains(d)));
    // k is uniform on [5, 10] and the residual only adds to it.
    let mean = report.point_deviations.iter().sum::<f64>() / report.point_deviations.len() as f64;
    assert!(mean >= 7.5 - 0.3, "mean deviation {mean}");
}

#[test]
fn gap_lengths_average_five_and_a_half() {
    let ds = dataset(
        &DatasetConfig {
            count: 200_000,
            locations: 10,
            horizon_days: 60,
            ..DatasetConfig::default()
        },
        10,
    );
    let cfg = InjectionConfig {
        rate: 0.001,
        missing_rate: 0.3,
        ..InjectionConfig::default()
    };
    let (after, report) = run(&ds, &cfg, 10).unwrap();
    check_structure(&ds.readings, &after, &report, &cfg);
    let lens = &report.gap_lengths;
    assert!(lens.len() >= 10_000, "{} gaps", lens.len());
    let n = lens.len() as f64;
    let mean = lens.iter().map(|&l| f64::from(l)).sum::<f64>() / n;
    assert!((5.0..=6.0).contains(&mean), "mean gap {mean}");

    // Histogram against an independent uniform draw over 1..=10.
    let mut r = rng(10);
    let reference: Vec<u32> = (0..lens.len()).map(|_| r.random_range(1..=10)).collect();
    let ref_mean = reference.iter().map(|&l| f64::from(l)).sum::<f64>() / n;
    assert!((5.0..=6.0).contains(&ref_mean));
    for len in 1..=10 {
        let a = lens.iter().filter(|l| **l == len).count() as f64 / n;
        let b = reference.iter().filter(|l| **l == len).count() as f64 / n;
        let se = (2.0 * 0.1 * 0.9 / n).sqrt();
        assert!((a - b).abs() <= 4.0 * se, "length {len}: {a} vs {b}");
    }
}

#[test]
fn zero_rates_leave_the_data_untouched() {
    let ds = dataset(&DatasetConfig::default(), 11);
    let cfg = InjectionConfig {
        rate: 1e-9,
        missing_rate: 0.0,
        ..InjectionConfig::default()
    };
    let (after, report) = run(&ds, &cfg, 11).unwrap();
    assert_eq!(after, ds.readings);
    assert_eq!(report.labeled, 0);
    assert!(ground_truth(&after).iter().all(|m| !m));
}

#[test]
fn infeasible_or_invalid_requests_are_errors() {
    let ds = dataset(&DatasetConfig::default(), 12);
    let over = InjectionConfig {
        rate: 0.95,
        ..InjectionConfig::default()
    };
    assert!(matches!(run(&ds, &over, 12), Err(InjectError::Capacity { .. })));
    for bad in [
        InjectionConfig {
            rate: 0.0,
            ..InjectionConfig::default()
        },
        InjectionConfig {
            k_range: [6.0, 5.0],
            ..InjectionConfig::default()
        },
        InjectionConfig {
            gap_range: [0, 4],
            ..InjectionConfig::default()
        },
    ] {
        assert!(matches!(run(&ds, &bad, 12), Err(InjectError::InvalidConfig(_))));
    }
}

fn small_case() -> impl Strategy<Value = (DatasetConfig, InjectionConfig, u64)> {
    (300usize..2500, 1u32..4, 0.005f64..0.06, 0.0f64..0.03, 1u32..4, 0u32..8, any::<u64>()).prop_map(
        |(count, locations, rate, missing_rate, g_lo, g_extra, seed)| {
            let ds = DatasetConfig {
                count,
                locations,
                horizon_days: 2,
                ..DatasetConfig::default()
            };
            let inj = InjectionConfig {
                rate,
                missing_rate,
                gap_range: [g_lo, g_lo + g_extra],
                ..InjectionConfig::default()
            };
            (ds, inj, seed)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn labels_are_consistent_and_spans_never_overlap((ds_cfg, cfg, seed) in small_case()) {
        let ds = dataset(&ds_cfg, seed);
        let (after, report) = run(&ds, &cfg, seed).unwrap();
        check_structure(&ds.readings, &after, &report, &cfg);
        prop_assert_eq!(report.target, (cfg.rate * after.len() as f64).round() as usize);
    }

    #[test]
    fn injection_is_deterministic((ds_cfg, cfg, seed) in small_case()) {
        let ds = dataset(&ds_cfg, seed);
        prop_assert_eq!(run(&ds, &cfg, seed).unwrap(), run(&ds, &cfg, seed).unwrap());
    }
}
