mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use rumtest_core::colgen::{project, ColgenConfig, ColumnPool};
use rumtest_core::geometry::Frequencies;
use rumtest_core::inducement::Inducement;
use rumtest_core::pipeline::{run_test_inducement, tightened_estimator, Mode, PipelineError, ReplicationOutcome, TestConfig};

/// Two periods whose second patches reveal each period preferred to the other.
fn cycle() -> Inducement {
    Inducement::new(vec![vec![0, 0b10], vec![0, 0b01]]).unwrap()
}

#[test]
fn two_period_cycle_matches_oracle() {
    let x = cycle();
    let types = brute_rational(&x);
    assert_eq!(types.len(), 3);
    let f = Frequencies::from_counts(&[vec![0, 10], vec![0, 10]]).unwrap();
    let n = f.total_observations() as f64;
    let oracle = n * nnls(&dense_matrix(&x, &types), &f.pi).1;
    // best mix puts half on each of the two half-consistent types
    assert!((oracle - n).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let res = project(&f.pi, &x, n, ColumnPool::new(), &ColgenConfig::default(), &mut rng, None).unwrap();
    assert!((res.objective - n).abs() < 1e-9);

    let cfg = TestConfig { bootstrap: 200, seed: 5, tau: Some(0.0), ..Default::default() };
    let r = run_test_inducement(&x, &f, &cfg, None).unwrap();
    assert!((r.j_stat - n).abs() < 1e-9);
    // every bootstrap draw repeats π̂, so the recentred target is η̂
    assert_eq!(r.p_value, Some(0.0));
}

#[test]
fn zero_tau_reproduces_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let s = random_structure(4, 3, &mut rng);
        let x = s.inducement();
        let all = brute_rational(x);
        let counts: Vec<Vec<u64>> = x
            .patch_counts()
            .iter()
            .map(|&n| (0..n).map(|_| rand::Rng::gen_range(&mut rng, 1..15)).collect())
            .collect();
        let f = Frequencies::from_counts(&counts).unwrap();
        let cfg = ColgenConfig::default();
        let plain = project(&f.pi, x, 1.0, ColumnPool::new(), &cfg, &mut rng, None).unwrap();
        let tight = tightened_estimator(&f.pi, 0.0, &all, x, 1.0, ColumnPool::new(), &cfg, &mut rng, None).unwrap();
        for (a, b) in plain.eta.iter().zip(&tight.eta) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn modes_agree_and_bounds_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = random_structure(5, 3, &mut rng);
    let x = s.inducement();
    let counts: Vec<Vec<u64>> = x
        .patch_counts()
        .iter()
        .map(|&n| (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..12)).map(|c| c + 1).collect())
        .collect();
    let f = Frequencies::from_counts(&counts).unwrap();
    let exact = run_test_inducement(x, &f, &TestConfig { bootstrap: 60, seed: 2, mode: Mode::Exact, ..Default::default() }, None)
        .unwrap();
    for mode in [Mode::Heur, Mode::HeurUb, Mode::HeurBounds] {
        let r = run_test_inducement(x, &f, &TestConfig { bootstrap: 60, seed: 2, mode, ..Default::default() }, None).unwrap();
        assert_eq!(r.j_stat, exact.j_stat);
        assert_eq!(r.p_value, exact.p_value, "{mode}");
        for (a, b) in r.replications.iter().zip(&exact.replications) {
            let ReplicationOutcome::Exact { value } = b.outcome else { panic!("exact mode gave {:?}", b.outcome) };
            match a.outcome {
                ReplicationOutcome::Exact { value: v } => assert!((v - value).abs() <= 1e-8 * (1.0 + value)),
                ReplicationOutcome::ExceedsRef { lower_bound } => assert!(lower_bound <= value + 1e-8 * (1.0 + value)),
                ReplicationOutcome::BelowRef { upper_bound } => assert!(upper_bound + 1e-8 * (1.0 + value) >= value),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}

#[test]
fn invalid_config_is_rejected() {
    let x = cycle();
    let f = Frequencies::from_counts(&[vec![3, 7], vec![4, 6]]).unwrap();
    for cfg in [
        TestConfig { bootstrap: 0, ..Default::default() },
        TestConfig { tau: Some(-1.0), ..Default::default() },
        TestConfig { batch_size: 0, ..Default::default() },
    ] {
        assert!(matches!(run_test_inducement(&x, &f, &cfg, None), Err(PipelineError::Config(_))));
    }
}
