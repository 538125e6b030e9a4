mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use rumtest_core::choice_types::{enumerate_rational_types, is_rational, ChoiceType};
use rumtest_core::colgen::{lower_bound, project, ColgenConfig, ColumnPool};
use rumtest_core::geometry::{Frequencies, TiePolicy, DEFAULT_TIE_EPS};
use rumtest_core::inducement::Inducement;
use rumtest_core::master::{solve_restricted, MasterConfig};
use rumtest_core::pipeline::{bootstrap_frequencies, recenter};
use rumtest_core::synth::random_bundle;

/// Arbitrary inducement tensors, not necessarily from prices, with roughly
/// a quarter of the relations set.
fn inducement() -> impl Strategy<Value = Inducement> {
    (2usize..=5)
        .prop_flat_map(|t| prop::collection::vec(prop::collection::vec(any::<u64>(), 1..=4), t))
        .prop_map(|rows| {
            let t = rows.len();
            let full = (1u64 << t) - 1;
            let below = rows
                .into_iter()
                .enumerate()
                .map(|(p, r)| r.into_iter().map(|m| m & (m >> 16) & full & !(1 << p)).collect())
                .collect();
            Inducement::new(below).unwrap()
        })
}

fn sorted(mut v: Vec<ChoiceType>) -> Vec<Vec<usize>> {
    v.sort_by(|a, b| a.picks().cmp(b.picks()));
    v.into_iter().map(|c| c.picks().to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn enumeration_matches_brute_force(x in inducement()) {
        let ours = enumerate_rational_types(&x, 1 << 20).unwrap();
        prop_assert_eq!(sorted(ours), sorted(brute_rational(&x)));
    }

    #[test]
    fn rationality_matches_transitive_closure(x in inducement(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let picks: Vec<usize> = (0..x.periods()).map(|t| rand::Rng::gen_range(&mut rng, 0..x.patch_count(t))).collect();
            prop_assert_eq!(is_rational(&ChoiceType::new(picks.clone()), &x), rational_dense(&x, &picks));
        }
    }

    #[test]
    fn patches_partition_the_budget_sets(seed in any::<u64>(), t in 1usize..=6, l in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(t, l, &mut rng);
        for (p, &n) in s.patch_counts().iter().enumerate() {
            prop_assert!(n >= 1 && n <= 1 << (t - 1));
            for _ in 0..50 {
                let q = random_bundle(&s.prices()[p], &mut rng);
                prop_assert!(s.patch_of_bundle(p, &q, DEFAULT_TIE_EPS, TiePolicy::Error).unwrap() < n);
            }
        }
    }

    #[test]
    fn lower_bound_never_exceeds_projection(x in inducement(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all = brute_rational(&x);
        prop_assume!(!all.is_empty());
        let counts: Vec<Vec<u64>> = x
            .patch_counts()
            .iter()
            .map(|&n| (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..10)).map(|c| c + 1).collect())
            .collect();
        let f = Frequencies::from_counts(&counts).unwrap();
        let exact = nnls(&dense_matrix(&x, &all), &f.pi).1;
        for k in 0..=all.len().min(8) {
            let sol = solve_restricted(&x, &all[..k], &f.pi, 1.0, None, &MasterConfig::default()).unwrap();
            let z = brute_max(&x, &all, &sol.residual);
            let lb = lower_bound(&sol.residual, Some(z), &f.pi, 1.0).unwrap();
            prop_assert!(lb <= exact + 1e-9 * (1.0 + exact), "k={} lb={} J={}", k, lb, exact);
        }
    }

    #[test]
    fn restricted_objective_decreases_with_columns(x in inducement(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all = brute_rational(&x);
        let target: Vec<f64> = (0..x.dim()).map(|_| rand::Rng::gen_range(&mut rng, 0.0..1.0)).collect();
        let cfg = MasterConfig::default();
        let mut last = f64::INFINITY;
        for k in 0..=all.len().min(12) {
            let j = solve_restricted(&x, &all[..k], &target, 1.0, None, &cfg).unwrap().objective;
            let oracle = nnls(&dense_matrix(&x, &all[..k]), &target).1;
            prop_assert!((j - oracle).abs() <= 1e-9 * (1.0 + oracle));
            prop_assert!(j <= last + 1e-12);
            last = j;
        }
    }

    #[test]
    fn recenter_is_affine(a in prop::collection::vec(0.0f64..1.0, 6), b in prop::collection::vec(0.0f64..1.0, 6),
                          c in prop::collection::vec(0.0f64..1.0, 6), d in prop::collection::vec(0.0f64..1.0, 6),
                          w in 0.0f64..1.0) {
        let mix: Vec<f64> = a.iter().zip(&d).map(|(u, v)| w * u + (1.0 - w) * v).collect();
        let lhs = recenter(&mix, &b, &c);
        let ra = recenter(&a, &b, &c);
        let rd = recenter(&d, &b, &c);
        for k in 0..6 {
            prop_assert!((lhs[k] - (w * ra[k] + (1.0 - w) * rd[k])).abs() < 1e-12);
        }
        prop_assert_eq!(recenter(&b, &b, &c), c);
    }
}

#[test]
fn bootstrap_mean_is_unbiased() {
    let counts = vec![vec![3, 7, 10], vec![12, 8], vec![1, 1, 1, 17]];
    let f = Frequencies::from_counts(&counts).unwrap();
    let below = counts.iter().map(|c| vec![0u64; c.len()]).collect();
    let x = Inducement::new(below).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let reps = 2000;
    let mut sum = vec![0.0; x.dim()];
    for _ in 0..reps {
        let draw = bootstrap_frequencies(&f, &x, &mut rng);
        for t in 0..x.periods() {
            let total: f64 = x.block(&draw, t).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        for (s, v) in sum.iter_mut().zip(draw) {
            *s += v;
        }
    }
    for t in 0..x.periods() {
        let n = f.period_sizes[t] as f64;
        for i in 0..x.patch_count(t) {
            let k = x.index(t, i);
            let p = f.pi[k];
            let se = (p * (1.0 - p) / (n * reps as f64)).sqrt();
            assert!((sum[k] / reps as f64 - p).abs() <= 3.0 * se + 1e-12, "coordinate {k}");
        }
    }
}

#[test]
fn warm_start_does_not_change_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let s = random_structure(5, 3, &mut rng);
        let x = s.inducement();
        let counts: Vec<Vec<u64>> = x
            .patch_counts()
            .iter()
            .map(|&n| (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..20)).map(|c| c + 1).collect())
            .collect();
        let f = Frequencies::from_counts(&counts).unwrap();
        let cfg = ColgenConfig::default();
        let cold = project(&f.pi, x, 1.0, ColumnPool::new(), &cfg, &mut rng, None).unwrap();
        let warm = project(&f.pi, x, 1.0, cold.pool.clone(), &cfg, &mut rng, None).unwrap();
        assert!(cold.converged && warm.converged);
        assert!((cold.objective - warm.objective).abs() <= 1e-10 * (1.0 + cold.objective));
        let oracle = nnls(&dense_matrix(x, &brute_rational(x)), &f.pi).1;
        assert!((cold.objective - oracle).abs() <= 1e-8 * (1.0 + oracle));
    }
}
