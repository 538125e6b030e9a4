//! The 0/1 inducement tensor: which price preferences a patch pick implies.
//!
//! `X[t][i][j] = 1` iff choosing patch `i` in period `t` reveals that prices
//! of period `j` are strictly preferred to prices of period `t`. Each patch
//! stores this row as a bitmask over periods, which caps the number of
//! periods at 64.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_PERIODS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum InducementError {
    #[error("at least one period is required")]
    NoPeriods,
    #[error("{0} periods exceed the supported maximum of {MAX_PERIODS}")]
    TooManyPeriods(usize),
    #[error("period {0} has no patches")]
    EmptyPeriod(usize),
    #[error("patch {patch} of period {period} references period {bad} outside 0..{periods} or itself")]
    BadRelation {
        period: usize,
        patch: usize,
        bad: usize,
        periods: usize,
    },
}

/// Bitmask helpers over period indices.
pub(crate) fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct Inducement {
    below: Vec<Vec<u64>>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Inducement {
    /// `below[t][i]` is the set of periods `j` with `X[t][i][j] = 1`.
    pub fn new(below: Vec<Vec<u64>>) -> Result<Self, InducementError> {
        let periods = below.len();
        if periods == 0 {
            return Err(InducementError::NoPeriods);
        }
        if periods > MAX_PERIODS {
            return Err(InducementError::TooManyPeriods(periods));
        }
        let valid = if periods == 64 {
            u64::MAX
        } else {
            (1u64 << periods) - 1
        };
        let mut offsets = Vec::with_capacity(periods);
        let mut dim = 0;
        for (t, patches) in below.iter().enumerate() {
            if patches.is_empty() {
                return Err(InducementError::EmptyPeriod(t));
            }
            for (i, &mask) in patches.iter().enumerate() {
                let bad = (mask & !valid) | (mask & (1u64 << t));
                if bad != 0 {
                    return Err(InducementError::BadRelation {
                        period: t,
                        patch: i,
                        bad: bad.trailing_zeros() as usize,
                        periods,
                    });
                }
            }
            offsets.push(dim);
            dim += patches.len();
        }
        Ok(Inducement {
            below,
            offsets,
            dim,
        })
    }

    /// Build from a dense `X[t][i][j]` tensor (diagonal entries must be 0).
    pub fn from_dense(x: &[Vec<Vec<bool>>]) -> Result<Self, InducementError> {
        let below = x
            .iter()
            .map(|period| {
                period
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(_, &v)| v)
                            .fold(0u64, |m, (j, _)| m | (1u64 << j.min(63)))
                    })
                    .collect()
            })
            .collect();
        Self::new(below)
    }

    pub fn periods(&self) -> usize {
        self.below.len()
    }

    pub fn patch_count(&self, t: usize) -> usize {
        self.below[t].len()
    }

    pub fn patch_counts(&self) -> Vec<usize> {
        self.below.iter().map(Vec::len).collect()
    }

    /// Total number of (period, patch) coordinates, `Σ_t I_t`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self, t: usize) -> usize {
        self.offsets[t]
    }

    /// Flat coordinate of patch `i` in period `t`.
    pub fn index(&self, t: usize, i: usize) -> usize {
        self.offsets[t] + i
    }

    pub fn below(&self, t: usize, i: usize) -> u64 {
        self.below[t][i]
    }

    pub fn period_masks(&self, t: usize) -> &[u64] {
        &self.below[t]
    }

    pub fn x(&self, t: usize, i: usize, j: usize) -> bool {
        self.below[t][i] >> j & 1 == 1
    }

    /// Dense `X[t][i][j]` tensor.
    pub fn to_dense(&self) -> Vec<Vec<Vec<bool>>> {
        let n = self.periods();
        self.below
            .iter()
            .map(|p| {
                p.iter()
                    .map(|&m| (0..n).map(|j| m >> j & 1 == 1).collect())
                    .collect()
            })
            .collect()
    }

    /// Slice of a flat vector belonging to period `t`.
    pub fn block<'a>(&self, v: &'a [f64], t: usize) -> &'a [f64] {
        &v[self.offsets[t]..self.offsets[t] + self.below[t].len()]
    }
}

impl TryFrom<Vec<Vec<u64>>> for Inducement {
    type Error = InducementError;

    fn try_from(value: Vec<Vec<u64>>) -> Result<Self, Self::Error> {
        Inducement::new(value)
    }
}

impl From<Inducement> for Vec<Vec<u64>> {
    fn from(value: Inducement) -> Self {
        value.below
    }
}
