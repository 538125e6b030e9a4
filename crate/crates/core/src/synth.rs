//! Synthetic instances for tests, benchmarks and the CLI.

use rand::Rng;

use crate::choice_types::{enumerate_rational_types, sample_rational_types, ChoiceType, RepairConfig, TypeError};
use crate::geometry::PatchStructure;
use crate::inducement::Inducement;

/// Prices drawn uniformly from `[0.5, 1.5)`.
pub fn random_prices<R: Rng + ?Sized>(periods: usize, goods: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..periods)
        .map(|_| (0..goods).map(|_| rng.gen_range(0.5..1.5)).collect())
        .collect()
}

/// A random bundle on the budget line `p · q = 1`.
pub fn random_bundle<R: Rng + ?Sized>(prices: &[f64], rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = prices.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let spend: f64 = raw.iter().zip(prices).map(|(a, b)| a * b).sum();
    raw.iter().map(|v| v / spend).collect()
}

/// Up to `k` distinct rational types, enumerated when there are few candidates.
pub fn random_rational_types<R: Rng + ?Sized>(
    x: &Inducement,
    k: usize,
    rng: &mut R,
) -> Result<Vec<ChoiceType>, TypeError> {
    match enumerate_rational_types(x, 10_000) {
        Ok(mut all) => {
            let mut out = Vec::with_capacity(k);
            while out.len() < k && !all.is_empty() {
                out.push(all.swap_remove(rng.gen_range(0..all.len())));
            }
            Ok(out)
        }
        Err(TypeError::TooLarge { .. }) => match sample_rational_types(x, k, rng, &RepairConfig::default()) {
            Err(TypeError::Exhausted { found, .. }) => sample_rational_types(x, found, rng, &RepairConfig::default()),
            r => r,
        },
        Err(e) => Err(e),
    }
}

/// Counts of a population in which `weights[k]` consumers follow `types[k]`.
pub fn mixture_counts(x: &Inducement, types: &[ChoiceType], weights: &[u64]) -> Vec<Vec<u64>> {
    let mut counts: Vec<Vec<u64>> = x.patch_counts().iter().map(|&n| vec![0; n]).collect();
    for (ty, &w) in types.iter().zip(weights) {
        for (t, &i) in ty.picks().iter().enumerate() {
            counts[t][i] += w;
        }
    }
    counts
}

/// `n` uniform draws over the patches of each period.
pub fn random_counts<R: Rng + ?Sized>(x: &Inducement, n: u64, rng: &mut R) -> Vec<Vec<u64>> {
    (0..x.periods())
        .map(|t| {
            let k = x.patch_count(t);
            let mut c = vec![0; k];
            for _ in 0..n {
                c[rng.gen_range(0..k)] += 1;
            }
            c
        })
        .collect()
}

/// One bundle per observation, using each patch's witness.
pub fn bundles_from_counts(structure: &PatchStructure, counts: &[Vec<u64>]) -> Vec<Vec<Vec<f64>>> {
    counts
        .iter()
        .enumerate()
        .map(|(t, row)| {
            row.iter()
                .enumerate()
                .flat_map(|(i, &n)| std::iter::repeat_n(structure.patches(t)[i].witness.clone(), n as usize))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice_types::is_rational;
    use crate::geometry::{enumerate_patches, TiePolicy, DEFAULT_DELTA, DEFAULT_TIE_EPS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bundle_on_budget_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = [0.7, 1.3, 1.1];
        let q = random_bundle(&p, &mut rng);
        let spend: f64 = q.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((spend - 1.0).abs() < 1e-12);
        assert!(q.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn witnesses_map_back_to_their_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let prices = random_prices(5, 3, &mut rng);
        let s = enumerate_patches(&prices, DEFAULT_DELTA).unwrap();
        let counts: Vec<Vec<u64>> = s.patch_counts().iter().map(|&n| vec![1; n]).collect();
        let bundles = bundles_from_counts(&s, &counts);
        for (t, b) in bundles.iter().enumerate() {
            for (i, q) in b.iter().enumerate() {
                assert_eq!(s.patch_of_bundle(t, q, DEFAULT_TIE_EPS, TiePolicy::Error).unwrap(), i);
            }
        }
    }

    #[test]
    fn mixture_is_rational_and_sized() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let prices = random_prices(4, 2, &mut rng);
        let s = enumerate_patches(&prices, DEFAULT_DELTA).unwrap();
        let x = s.inducement();
        let types = random_rational_types(x, 3, &mut rng).unwrap();
        assert!(types.iter().all(|t| is_rational(t, x)));
        let counts = mixture_counts(x, &types, &[2, 3, 5][..types.len()]);
        let total: u64 = [2u64, 3, 5][..types.len()].iter().sum();
        assert!(counts.iter().all(|c| c.iter().sum::<u64>() == total));
    }
}
