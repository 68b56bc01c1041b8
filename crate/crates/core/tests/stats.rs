use ergolab_core::stats::{bootstrap, frequency_check, Statistic};
use ergolab_core::{Error, RandomPlan};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn constant_values() {
    let ci = bootstrap(&[2.5; 10], Statistic::Mean, 20, &RandomPlan::new(1)).unwrap();
    assert_eq!((ci.point, ci.lo, ci.hi), (2.5, 2.5, 2.5));
}

#[test]
fn balanced_pair() {
    let vals: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
    let ci = bootstrap(&vals, Statistic::Mean, 50, &RandomPlan::new(2)).unwrap();
    assert_eq!(ci.point, 0.5);
    assert!(ci.lo <= 0.5 && 0.5 <= ci.hi);
}

#[test]
fn uniform_mean() {
    let mut rng = RandomPlan::new(3).rng(0);
    let vals: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
    let ci = bootstrap(&vals, Statistic::Mean, 20, &RandomPlan::new(4)).unwrap();
    assert!((ci.point - 0.5).abs() <= 0.01);
    assert!(ci.hi - ci.lo < 0.02);
}

#[test]
fn preconditions() {
    assert!(bootstrap(&[1.0], Statistic::Mean, 20, &RandomPlan::new(0)).is_err());
    assert!(bootstrap(&[1.0, 2.0], Statistic::Mean, 19, &RandomPlan::new(0)).is_err());
    assert!(matches!(frequency_check(&[1, 2], &[1.0], 3.0), Err(Error::LengthMismatch { .. })));
}

#[test]
fn frequency_examples() {
    assert!(frequency_check(&[250, 500, 250], &[0.25, 0.5, 0.25], 1.0).unwrap());
    // 10σ off in the first cell (σ = 15.8 for N = 1000, p = 0.5)
    assert!(!frequency_check(&[658, 342], &[0.5, 0.5], 4.0).unwrap());
    let mut rng = RandomPlan::new(42).rng(0);
    let heads = (0..100_000).filter(|_| rng.gen::<bool>()).count() as u64;
    assert!(frequency_check(&[heads, 100_000 - heads], &[0.5, 0.5], 4.0).unwrap());
}

proptest! {
    #[test]
    fn interval_contains_point(vals in proptest::collection::vec(-5.0f64..5.0, 2..60), seed in any::<u64>()) {
        let plan = RandomPlan::new(seed);
        for stat in [Statistic::Mean, Statistic::Count] {
            let ci = bootstrap(&vals, stat, 20, &plan).unwrap();
            prop_assert!(ci.lo <= ci.point && ci.point <= ci.hi);
            prop_assert_eq!(&ci, &bootstrap(&vals, stat, 20, &plan).unwrap());
        }
    }
}
