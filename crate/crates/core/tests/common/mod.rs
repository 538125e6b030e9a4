//! Independent dense oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rumtest_core::choice_types::ChoiceType;
use rumtest_core::geometry::{enumerate_patches, PatchStructure, DEFAULT_DELTA};
use rumtest_core::inducement::Inducement;
use rumtest_core::synth::random_prices;

/// Random prices that produce a patch structure.
pub fn random_structure<R: Rng>(periods: usize, goods: usize, rng: &mut R) -> PatchStructure {
    loop {
        let prices = random_prices(periods, goods, rng);
        if let Ok(s) = enumerate_patches(&prices, DEFAULT_DELTA) {
            return s;
        }
    }
}

pub fn product(x: &Inducement) -> u128 {
    x.patch_counts().iter().map(|&n| n as u128).product()
}

/// Acyclicity through a dense transitive closure.
pub fn rational_dense(x: &Inducement, picks: &[usize]) -> bool {
    let n = x.periods();
    // reach[a][b]: a is revealed preferred to b
    let mut reach = vec![vec![false; n]; n];
    for t in 0..n {
        for j in 0..n {
            if j != t && x.x(t, picks[t], j) {
                reach[j][t] = true;
            }
        }
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a][k] {
                for b in 0..n {
                    if reach[k][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    (0..n).all(|a| !reach[a][a])
}

/// All rational types by brute force over the Cartesian product.
pub fn brute_rational(x: &Inducement) -> Vec<ChoiceType> {
    let sizes = x.patch_counts();
    let mut picks = vec![0usize; sizes.len()];
    let mut out = Vec::new();
    loop {
        if rational_dense(x, &picks) {
            out.push(ChoiceType::new(picks.clone()));
        }
        let mut t = sizes.len();
        loop {
            if t == 0 {
                return out;
            }
            t -= 1;
            picks[t] += 1;
            if picks[t] < sizes[t] {
                break;
            }
            picks[t] = 0;
        }
    }
}

pub fn dense_column(x: &Inducement, ty: &ChoiceType) -> Vec<f64> {
    let mut v = vec![0.0; x.dim()];
    for (t, &i) in ty.picks().iter().enumerate() {
        v[x.index(t, i)] = 1.0;
    }
    v
}

pub fn dense_matrix(x: &Inducement, types: &[ChoiceType]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(x.dim(), types.len());
    for (r, ty) in types.iter().enumerate() {
        for (k, v) in dense_column(x, ty).into_iter().enumerate() {
            a[(k, r)] = v;
        }
    }
    a
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().svd(true, true).solve(b, 1e-12).expect("svd solve")
}

/// `min ‖b - A p‖²` subject to `p ≥ lb`, by an active set that works in the
/// original variables: bound-fixed variables sit at `lb`, free ones come
/// from a dense SVD least-squares solve.
pub fn bounded_ls(a: &DMatrix<f64>, b: &[f64], lb: &[f64]) -> (Vec<f64>, f64) {
    let n = a.ncols();
    let b = DVector::from_column_slice(b);
    let mut p = DVector::from_column_slice(lb);
    let mut free = vec![false; n];
    for _ in 0..(20 * n + 100) {
        let resid = &b - a * &p;
        let grad = a.transpose() * &resid;
        let enter = (0..n)
            .filter(|&r| !free[r] && grad[r] > 1e-12)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(enter) = enter else { break };
        free[enter] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&r| free[r]).collect();
            let fixed_part = {
                let mut q = p.clone();
                for &r in &idx {
                    q[r] = 0.0;
                }
                a * q
            };
            let sub = a.select_columns(&idx);
            let y = lstsq(&sub, &(&b - fixed_part));
            if idx.iter().zip(y.iter()).all(|(&r, &v)| v > lb[r]) {
                for (&r, &v) in idx.iter().zip(y.iter()) {
                    p[r] = v;
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (&r, &v) in idx.iter().zip(y.iter()) {
                if v <= lb[r] {
                    let step = (p[r] - lb[r]) / (p[r] - v);
                    alpha = alpha.min(step);
                }
            }
            for (&r, &v) in idx.iter().zip(y.iter()) {
                p[r] += alpha * (v - p[r]);
                if p[r] - lb[r] <= 1e-14 {
                    p[r] = lb[r];
                    free[r] = false;
                }
            }
        }
    }
    let resid = &b - a * &p;
    (p.iter().copied().collect(), resid.norm_squared())
}

pub fn nnls(a: &DMatrix<f64>, b: &[f64]) -> (Vec<f64>, f64) {
    bounded_ls(a, b, &vec![0.0; a.ncols()])
}

/// `N ‖target - c‖²` minimised over `s·c ≤ z`, by bisection on the
/// multiplier of the Lagrangian.
pub fn halfspace_bisect(s: &[f64], z: f64, target: &[f64], scale: f64) -> f64 {
    let c_of = |mu: f64| -> Vec<f64> { target.iter().zip(s).map(|(t, v)| t - mu * v).collect() };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if dot(s, target) <= z {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while dot(s, &c_of(hi)) > z {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dot(s, &c_of(mid)) > z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = c_of(hi);
    scale * target.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// `max_r s·a_r` by scanning the given types in period order.
pub fn brute_max(x: &Inducement, types: &[ChoiceType], s: &[f64]) -> f64 {
    types
        .iter()
        .map(|ty| ty.picks().iter().enumerate().map(|(t, &i)| s[x.index(t, i)]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}
