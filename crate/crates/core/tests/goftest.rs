use proptest::prelude::*;
use recordchar::goftest::{
    calibrate_null, extract_records, pivot_statistic, rejection_rate, run_test, Alternative,
    TestConfig,
};
use recordchar::records::RecordSequence;
use recordchar::{ExponentialDist, WeibullDist};

fn increasing(min_len: usize) -> impl Strategy<Value = Vec<f64>> {
    (
        -5.0f64..5.0,
        prop::collection::vec(0.01f64..3.0, min_len..min_len + 6),
    )
        .prop_map(|(start, gaps)| {
            gaps.iter()
                .scan(start, |acc, g| {
                    *acc += g;
                    Some(*acc)
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn pivot_is_affine_invariant(values in increasing(5), a in -10.0f64..10.0, b in 0.1f64..10.0) {
        let s = RecordSequence::from_values(values.clone()).unwrap();
        let moved = RecordSequence::from_values(values.iter().map(|x| a + b * x).collect()).unwrap();
        let t0 = pivot_statistic(&s, 3, 2).unwrap();
        let t1 = pivot_statistic(&moved, 3, 2).unwrap();
        prop_assert!((t0 - t1).abs() < 1e-9);
        prop_assert!(t0.abs() <= 0.5);
    }

    #[test]
    fn extraction_is_idempotent(raw in prop::collection::vec(-100.0f64..100.0, 0..60)) {
        let once = extract_records(&raw);
        let twice = extract_records(&once.values);
        prop_assert_eq!(&once.values, &twice.values);
        prop_assert!(once.values.windows(2).all(|w| w[0] < w[1]));
        if let Some(&first) = raw.first() {
            prop_assert_eq!(once.values[0], first);
            let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(*once.values.last().unwrap(), max);
        }
    }
}

#[test]
fn p_values_are_monotone_in_extremeness() {
    let table = calibrate_null(&TestConfig::default()).unwrap();
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 100.0).collect();
    for w in grid.windows(2) {
        assert!(
            table.p_value(w[1], Alternative::TwoSided)
                <= table.p_value(w[0], Alternative::TwoSided)
        );
        assert!(
            table.p_value(w[1], Alternative::Greater) <= table.p_value(w[0], Alternative::Greater)
        );
        assert!(table.p_value(-w[1], Alternative::Less) <= table.p_value(-w[0], Alternative::Less));
    }
    let floor = 1.0 / (table.len() as f64 + 1.0);
    assert_eq!(table.p_value(10.0, Alternative::TwoSided), floor);
    assert_eq!(table.p_value(0.0, Alternative::TwoSided), 1.0);
}

#[test]
fn null_pivot_is_centred_and_symmetric() {
    let cfg = TestConfig {
        null_reps: 20_000,
        seed: 3,
        ..TestConfig::default()
    };
    let table = calibrate_null(&cfg).unwrap();
    let se = table.std_dev() / (table.len() as f64).sqrt();
    assert!(
        table.mean().abs() < 4.0 * se,
        "mean {} se {se}",
        table.mean()
    );
    for &p in &[0.05, 0.1, 0.25] {
        assert!((table.quantile(p) + table.quantile(1.0 - p)).abs() < 0.02);
    }
}

#[test]
fn size_holds_under_any_exponential() {
    let cfg = TestConfig::default();
    let table = calibrate_null(&cfg).unwrap();
    let shifted = ExponentialDist::new(2.0, 0.5).unwrap();
    let size = rejection_rate(&shifted, &cfg, &table, 4000, 77).unwrap();
    assert!((0.035..=0.065).contains(&size), "size {size}");
}

#[test]
fn report_carries_config_and_summary() {
    let cfg = TestConfig {
        null_reps: 1000,
        ..TestConfig::default()
    };
    let s = RecordSequence::from_values(vec![0.1, 0.5, 0.9, 1.3, 4.0]).unwrap();
    let rep = run_test(&s, &cfg).unwrap();
    assert_eq!(rep.config, cfg);
    assert_eq!(rep.records_available, 5);
    assert_eq!(rep.null_quantiles.reps, 1000);
    assert_eq!(rep.reject, rep.p_value <= cfg.alpha);
    let short = RecordSequence::from_values(vec![0.1, 0.5]).unwrap();
    assert!(run_test(&short, &cfg).is_err());
}

#[test]
fn weibull_power_direction() {
    // increasing hazard pulls the median record above the midrange
    let cfg = TestConfig {
        alternative: Alternative::Greater,
        ..TestConfig::default()
    };
    let table = calibrate_null(&cfg).unwrap();
    let w = WeibullDist::new(2.0, 1.0).unwrap();
    let power = rejection_rate(&w, &cfg, &table, 4000, 5).unwrap();
    assert!(power > cfg.alpha + 0.02, "power {power}");
}
