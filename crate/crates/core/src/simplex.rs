//! Small dense two-phase simplex method.
//!
//! Only meant for the tiny margin programs solved during patch enumeration
//! (at most `T - 1` inequality rows plus one normalisation row, `L + 1`
//! columns). Pivoting uses Bland's rule, so degenerate vertices cannot cycle.

use thiserror::Error;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("constraint has {got} coefficients, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Maximise `objective · x` subject to `constraints` and `x >= 0`.
pub fn maximize(objective: &[f64], constraints: &[Constraint]) -> Result<LpSolution, LpError> {
    let n = objective.len();
    for c in constraints {
        if c.coeffs.len() != n {
            return Err(LpError::Dimension {
                expected: n,
                got: c.coeffs.len(),
            });
        }
    }
    let mut tab = Tableau::build(n, constraints);
    tab.phase_one()?;
    tab.phase_two(objective)?;
    let x = tab.primal(n);
    let objective_value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        objective: objective_value,
    })
}

struct Tableau {
    // rows x (cols + 1); last column is the right-hand side
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(n: usize, constraints: &[Constraint]) -> Self {
        let m = constraints.len();
        let slack_count = constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        // every row gets an artificial variable; rows whose slack can start
        // basic simply never use theirs
        let artificial_start = n + slack_count;
        let cols = artificial_start + m;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = n;
        for (r, c) in constraints.iter().enumerate() {
            let mut row = vec![0.0; cols + 1];
            let flip = c.rhs < 0.0;
            let sign = if flip { -1.0 } else { 1.0 };
            for (j, a) in c.coeffs.iter().enumerate() {
                row[j] = sign * a;
            }
            row[cols] = sign * c.rhs;
            let relation = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            match relation {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[artificial_start + r] = 1.0;
                    basis.push(artificial_start + r);
                }
                Relation::Eq => {
                    row[artificial_start + r] = 1.0;
                    basis.push(artificial_start + r);
                }
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            cols,
            artificial_start,
        }
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        if self.basis.iter().all(|&b| b < self.artificial_start) {
            return Ok(());
        }
        // maximise -sum(artificials)
        let mut cost = vec![0.0; self.cols];
        for c in cost.iter_mut().skip(self.artificial_start) {
            *c = -1.0;
        }
        let value = self.optimize(&cost, self.cols)?;
        if value < -1e-9 {
            return Err(LpError::Infeasible);
        }
        // drive remaining (zero-valued) artificials out of the basis
        for r in 0..self.rows.len() {
            if self.basis[r] >= self.artificial_start {
                if let Some(j) =
                    (0..self.artificial_start).find(|&j| self.rows[r][j].abs() > EPS)
                {
                    self.pivot(r, j);
                }
            }
        }
        Ok(())
    }

    fn phase_two(&mut self, objective: &[f64]) -> Result<(), LpError> {
        let mut cost = vec![0.0; self.cols];
        cost[..objective.len()].copy_from_slice(objective);
        self.optimize(&cost, self.artificial_start).map(|_| ())
    }

    /// Primal simplex with Bland's rule over columns `0..allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<f64, LpError> {
        loop {
            // reduced cost c_j - c_B B^-1 A_j
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut reduced = cost[j];
                for (r, &b) in self.basis.iter().enumerate() {
                    reduced -= cost[b] * self.rows[r][j];
                }
                reduced > EPS
            });
            let Some(j) = entering else {
                let value = self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(r, &b)| cost[b] * self.rows[r][self.cols])
                    .sum();
                return Ok(value);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > EPS {
                    let ratio = self.rows[r][self.cols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS
                                || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = j;
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[r][self.cols].max(0.0);
            }
        }
        x
    }
}
