//! Restricted master problem: Euclidean projection of a target vector onto
//! the cone spanned by a finite set of choice-type columns.
//!
//! Solved as nonnegative least squares with a Lawson–Hanson active-set
//! method. Columns are 0/1 with exactly one nonzero per period block, so the
//! Gram matrix entry for two columns is the number of periods on which they
//! pick the same patch and never needs the dense columns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choice_types::ChoiceType;
use crate::inducement::Inducement;

#[derive(Debug, Error, PartialEq)]
pub enum MasterError {
    #[error("target has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("passive-set solve produced non-finite weights ({size} columns)")]
    NumericalFailure { size: usize },
    #[error("active-set method did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("tightening subset must be nonempty when tau > 0")]
    EmptySubset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterConfig {
    /// Absolute tolerance on the KKT multipliers `s·a_r - s·v`.
    pub tol: f64,
    /// Relative Cholesky pivot below which an entering column counts as
    /// linearly dependent on the passive set.
    pub pivot_tol: f64,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            tol: 1e-9,
            pivot_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterSolution {
    /// `p*`, one weight per column (zeros included).
    pub weights: Vec<f64>,
    /// `s* = target - v*`.
    pub residual: Vec<f64>,
    /// `v* = Σ_r p*_r a_r`.
    pub projection: Vec<f64>,
    /// `J = N ‖s*‖²`.
    pub objective: f64,
    pub scale: f64,
    /// Columns with positive weight, usable as a warm start.
    pub passive: Vec<usize>,
}

impl MasterSolution {
    /// `s*·v*`, the pricing threshold.
    pub fn threshold(&self) -> f64 {
        dot(&self.residual, &self.projection)
    }

    /// `max_r (s*·a_r) - s*·v*` over the given columns.
    pub fn kkt_violation(&self, x: &Inducement, columns: &[ChoiceType]) -> f64 {
        let thr = self.threshold();
        columns
            .iter()
            .map(|c| c.value(x, &self.residual) - thr)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram(a: &ChoiceType, b: &ChoiceType) -> f64 {
    a.picks()
        .iter()
        .zip(b.picks())
        .filter(|(x, y)| x == y)
        .count() as f64
}

fn residual_of(x: &Inducement, columns: &[ChoiceType], target: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut projection = vec![0.0; target.len()];
    for (c, &w) in columns.iter().zip(weights) {
        if w != 0.0 {
            for k in c.coordinates(x) {
                projection[k] += w;
            }
        }
    }
    let residual = target.iter().zip(&projection).map(|(t, v)| t - v).collect();
    (residual, projection)
}

/// Cholesky factor of the passive Gram matrix, kept in passive-set order and
/// updated in place as columns enter and leave.
struct Factor {
    /// Lower-triangular rows; `rows[i]` has `i + 1` entries.
    rows: Vec<Vec<f64>>,
}

impl Factor {
    fn new() -> Self {
        Factor { rows: Vec::new() }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    /// Append a column with Gram entries `g` against the current set and
    /// squared norm `d`. Returns false, leaving the factor unchanged, when
    /// the column is numerically dependent on the current set.
    fn push(&mut self, g: &[f64], d: f64, pivot_tol: f64) -> bool {
        let mut y = Vec::with_capacity(self.rows.len() + 1);
        for (i, row) in self.rows.iter().enumerate() {
            let v = g[i] - dot(&row[..i], &y);
            y.push(v / row[i]);
        }
        let rem = d - dot(&y, &y);
        if rem.is_nan() || rem <= pivot_tol * d {
            return false;
        }
        y.push(rem.sqrt());
        self.rows.push(y);
        true
    }

    /// Drop the column at position `k`, restoring triangularity with Givens
    /// rotations.
    fn remove(&mut self, k: usize) {
        self.rows.remove(k);
        for i in k..self.rows.len() {
            let (a, b) = (self.rows[i][i], self.rows[i][i + 1]);
            let r = a.hypot(b);
            let (c, s) = (a / r, b / r);
            for row in &mut self.rows[i..] {
                let (u, v) = (row[i], row[i + 1]);
                row[i] = c * u + s * v;
                row[i + 1] = c * v - s * u;
            }
            self.rows[i].pop();
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        let mut y = Vec::with_capacity(n);
        for (i, row) in self.rows.iter().enumerate() {
            y.push((b[i] - dot(&row[..i], &y)) / row[i]);
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for (row, yj) in self.rows[i + 1..].iter().zip(&y[i + 1..]) {
                v -= row[i] * yj;
            }
            y[i] = v / self.rows[i][i];
        }
        y
    }
}

/// Passive columns with their factor.
struct PassiveSet {
    cols: Vec<usize>,
    factor: Factor,
}

impl PassiveSet {
    fn push(&mut self, columns: &[ChoiceType], i: usize, pivot_tol: f64) -> bool {
        let g: Vec<f64> = self.cols.iter().map(|&j| gram(&columns[i], &columns[j])).collect();
        let d = columns[i].picks().len() as f64;
        if self.factor.push(&g, d, pivot_tol) {
            self.cols.push(i);
            true
        } else {
            false
        }
    }

    fn remove(&mut self, pos: usize) {
        self.cols.remove(pos);
        self.factor.remove(pos);
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, MasterError> {
        let b: Vec<f64> = self.cols.iter().map(|&i| rhs[i]).collect();
        let z = self.factor.solve(&b);
        if z.iter().all(|v| v.is_finite()) {
            Ok(z)
        } else {
            Err(MasterError::NumericalFailure {
                size: self.factor.len(),
            })
        }
    }
}

/// Minimise `N ‖target - A p‖²` over `p ≥ 0`.
pub fn solve_restricted(
    x: &Inducement,
    columns: &[ChoiceType],
    target: &[f64],
    scale: f64,
    warm_start: Option<&[usize]>,
    config: &MasterConfig,
) -> Result<MasterSolution, MasterError> {
    if target.len() != x.dim() {
        return Err(MasterError::Dimension {
            expected: x.dim(),
            found: target.len(),
        });
    }
    let k = columns.len();
    let rhs: Vec<f64> = columns.iter().map(|c| c.value(x, target)).collect();
    let mut weights = vec![0.0; k];
    let mut in_passive = vec![false; k];
    let mut set = PassiveSet {
        cols: Vec::new(),
        factor: Factor::new(),
    };
    if let Some(warm) = warm_start {
        let mut warm: Vec<usize> = warm.iter().copied().filter(|&i| i < k).collect();
        warm.sort_unstable();
        warm.dedup();
        for i in warm {
            if set.push(columns, i, config.pivot_tol) {
                in_passive[i] = true;
            }
        }
    }
    // shrink the warm set until its least-squares weights are positive
    while set.factor.len() > 0 {
        let z = set.solve(&rhs)?;
        if z.iter().all(|&v| v > 0.0) {
            for (&i, &v) in set.cols.iter().zip(&z) {
                weights[i] = v;
            }
            break;
        }
        for pos in (0..z.len()).rev() {
            if z[pos] <= 0.0 {
                in_passive[set.cols[pos]] = false;
                set.remove(pos);
            }
        }
    }
    let (mut residual, mut projection) = residual_of(x, columns, target, &weights);
    // a column that enters and is immediately rejected stays blocked until
    // the weights move
    let mut blocked = vec![false; k];
    let max_iter = 3 * k + 100;
    let mut iter = 0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..k {
            if in_passive[i] || blocked[i] {
                continue;
            }
            let w = columns[i].value(x, &residual);
            if w > config.tol && best.is_none_or(|(_, bw)| w > bw) {
                best = Some((i, w));
            }
        }
        let Some((enter, _)) = best else {
            break;
        };
        iter += 1;
        if iter > max_iter {
            return Err(MasterError::NoConvergence(max_iter));
        }
        if !set.push(columns, enter, config.pivot_tol) {
            blocked[enter] = true;
            continue;
        }
        in_passive[enter] = true;
        let mut first = true;
        loop {
            let z = set.solve(&rhs)?;
            if first {
                first = false;
                if *z.last().expect("entered column is passive") <= 0.0 {
                    set.remove(set.cols.len() - 1);
                    in_passive[enter] = false;
                    blocked[enter] = true;
                    break;
                }
            }
            if z.iter().all(|&v| v > 0.0) {
                for (&i, &v) in set.cols.iter().zip(&z) {
                    weights[i] = v;
                }
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            // step towards z until the first weight hits zero
            let mut alpha = 1.0f64;
            let mut hit = 0;
            for (pos, (&i, &v)) in set.cols.iter().zip(&z).enumerate() {
                if v <= 0.0 {
                    let p = weights[i];
                    let a = p / (p - v);
                    if a < alpha {
                        alpha = a;
                        hit = pos;
                    }
                }
            }
            for (&i, &v) in set.cols.iter().zip(&z) {
                weights[i] += alpha * (v - weights[i]);
            }
            weights[set.cols[hit]] = 0.0;
            for pos in (0..set.cols.len()).rev() {
                let i = set.cols[pos];
                if pos == hit || weights[i] <= 0.0 {
                    weights[i] = 0.0;
                    in_passive[i] = false;
                    set.remove(pos);
                }
            }
            blocked.iter_mut().for_each(|b| *b = false);
            if set.cols.is_empty() {
                break;
            }
        }
        let (r, v) = residual_of(x, columns, target, &weights);
        residual = r;
        projection = v;
    }
    let objective = scale * dot(&residual, &residual);
    let mut passive = set.cols;
    passive.sort_unstable();
    Ok(MasterSolution {
        weights,
        residual,
        projection,
        objective,
        scale,
        passive,
    })
}

/// `Σ_{r∈R′} (τ/|R′|) a_r`.
pub fn shift_vector(x: &Inducement, tau: f64, subset: &[ChoiceType]) -> Vec<f64> {
    let mut shift = vec![0.0; x.dim()];
    if tau == 0.0 || subset.is_empty() {
        return shift;
    }
    let w = tau / subset.len() as f64;
    for r in subset {
        for k in r.coordinates(x) {
            shift[k] += w;
        }
    }
    shift
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedSolution {
    /// Solution of the shifted problem (target `π̂ - shift`).
    pub solution: MasterSolution,
    pub shift: Vec<f64>,
    /// `η̂_τ = A p* + shift`.
    pub tightened: Vec<f64>,
    /// Some shifted target coordinate went negative.
    pub negative_shift: bool,
}

/// Shifted-target variant equivalent to lower-bounding the weights of the
/// types in `subset` by `τ/|subset|`.
#[allow(clippy::too_many_arguments)]
pub fn solve_restricted_shifted(
    x: &Inducement,
    columns: &[ChoiceType],
    target: &[f64],
    tau: f64,
    subset: &[ChoiceType],
    scale: f64,
    warm_start: Option<&[usize]>,
    config: &MasterConfig,
) -> Result<ShiftedSolution, MasterError> {
    if tau > 0.0 && subset.is_empty() {
        return Err(MasterError::EmptySubset);
    }
    let shift = shift_vector(x, tau, subset);
    let shifted: Vec<f64> = target.iter().zip(&shift).map(|(a, b)| a - b).collect();
    let negative_shift = shifted.iter().any(|&v| v < 0.0);
    if negative_shift {
        log::debug!("tightening shift drives part of the target negative");
    }
    let solution = solve_restricted(x, columns, &shifted, scale, warm_start, config)?;
    let tightened = solution
        .projection
        .iter()
        .zip(&shift)
        .map(|(a, b)| a + b)
        .collect();
    Ok(ShiftedSolution {
        solution,
        shift,
        tightened,
        negative_shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice_types::enumerate_rational_types;

    fn cfg() -> MasterConfig {
        MasterConfig::default()
    }

    #[test]
    fn empty_pool_projects_to_origin() {
        let x = Inducement::new(vec![vec![0, 0]]).unwrap();
        let s = solve_restricted(&x, &[], &[0.8, 0.2], 3.0, None, &cfg()).unwrap();
        assert!(s.weights.is_empty());
        assert_eq!(s.projection, vec![0.0, 0.0]);
        assert!((s.objective - 3.0 * 0.68).abs() < 1e-15);
    }

    #[test]
    fn target_equal_to_column() {
        let x = Inducement::new(vec![vec![0, 0], vec![0, 0]]).unwrap();
        let col = ChoiceType::new(vec![1, 0]);
        let target = col.to_vector(&x);
        let s = solve_restricted(&x, &[col], &target, 10.0, None, &cfg()).unwrap();
        assert!((s.weights[0] - 1.0).abs() < 1e-14);
        assert!(s.objective < 1e-24);
    }

    #[test]
    fn ray_projection() {
        // oracle: p* = (target·a)/‖a‖² = 0.8, residual (0, 0.2)
        let x = Inducement::new(vec![vec![0, 0]]).unwrap();
        let s = solve_restricted(&x, &[ChoiceType::new(vec![0])], &[0.8, 0.2], 1.0, None, &cfg())
            .unwrap();
        assert!((s.weights[0] - 0.8).abs() < 1e-14);
        assert!((s.objective - 0.04).abs() < 1e-14);
    }

    #[test]
    fn negative_direction_gets_zero_weight() {
        let x = Inducement::new(vec![vec![0, 0]]).unwrap();
        let s = solve_restricted(&x, &[ChoiceType::new(vec![0])], &[-0.5, 0.2], 1.0, None, &cfg())
            .unwrap();
        assert_eq!(s.weights, vec![0.0]);
        assert!((s.objective - 0.29).abs() < 1e-14);
    }

    #[test]
    fn dependent_columns_do_not_break_solver() {
        // four types on 2x2 periods: a1 + a4 = a2 + a3
        let x = Inducement::new(vec![vec![0, 0], vec![0, 0]]).unwrap();
        let cols: Vec<_> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|p| ChoiceType::new(p.to_vec()))
            .collect();
        let target = [0.3, 0.7, 0.6, 0.4];
        let s = solve_restricted(&x, &cols, &target, 1.0, None, &cfg()).unwrap();
        assert!(s.objective < 1e-20);
        assert!(s.kkt_violation(&x, &cols) <= 1e-9);
    }

    #[test]
    fn warm_start_reaches_same_optimum() {
        let x = Inducement::new(vec![vec![0b10, 0, 0b10], vec![0b01, 0]]).unwrap();
        let cols = enumerate_rational_types(&x, 100).unwrap();
        let target = [0.5, 0.1, 0.4, 0.9, 0.1];
        let cold = solve_restricted(&x, &cols, &target, 2.0, None, &cfg()).unwrap();
        let all: Vec<usize> = (0..cols.len()).collect();
        let warm = solve_restricted(&x, &cols, &target, 2.0, Some(&all), &cfg()).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-12);
    }

    #[test]
    fn shifted_single_period() {
        // both unit types, tau = 0.2 -> subtract 0.1 per coordinate
        let x = Inducement::new(vec![vec![0, 0]]).unwrap();
        let cols = vec![ChoiceType::new(vec![0]), ChoiceType::new(vec![1])];
        let s = solve_restricted_shifted(&x, &cols, &[0.3, 0.7], 0.2, &cols, 5.0, None, &cfg())
            .unwrap();
        assert_eq!(s.shift, vec![0.1, 0.1]);
        assert!(s.solution.objective < 1e-24);
        assert!((s.tightened[0] - 0.3).abs() < 1e-14);
        assert!(!s.negative_shift);
    }

    #[test]
    fn shifted_needs_subset() {
        let x = Inducement::new(vec![vec![0, 0]]).unwrap();
        assert_eq!(
            solve_restricted_shifted(&x, &[], &[0.5, 0.5], 0.1, &[], 1.0, None, &cfg()).unwrap_err(),
            MasterError::EmptySubset
        );
    }

    #[test]
    fn dimension_check() {
        let x = Inducement::new(vec![vec![0, 0]]).unwrap();
        assert!(solve_restricted(&x, &[], &[1.0], 1.0, None, &cfg()).is_err());
    }
}
