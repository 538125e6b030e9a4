//! Budget geometry: partitioning each period's choice space into patches.
//!
//! For period `t` and every other period `j`, a bundle `q` falls strictly on
//! one side of the hyperplane `(p_j - p_t)·q = 0`. The vector of those sides
//! (`σ_j = +1` when `q` costs more at `p_j`, `-1` when it costs less) is the
//! patch's sign vector. A sign vector is realised when some bundle on the
//! unit simplex attains it with margin at least `δ`; this is decided by a
//! small margin-maximising linear program.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inducement::{Inducement, InducementError, MAX_PERIODS};
use crate::simplex::{self, Constraint, Relation};

/// Default minimum margin for a patch to count as nonempty.
pub const DEFAULT_DELTA: f64 = 1e-9;
/// Default relative tolerance under which an observed bundle is a tie.
pub const DEFAULT_TIE_EPS: f64 = 1e-12;

// partial sign vectors with a best margin at or below this are pruned
const REALIZED_EPS: f64 = 1e-13;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dataset has no periods")]
    NoPeriods,
    #[error("{0} periods exceed the supported maximum of {MAX_PERIODS}")]
    TooManyPeriods(usize),
    #[error("period {period}: expected {expected} goods, found {found}")]
    GoodsMismatch {
        period: usize,
        expected: usize,
        found: usize,
    },
    #[error("period {period}: price {value} is not strictly positive")]
    NonPositivePrice { period: usize, value: f64 },
    #[error("periods {first} and {second} have proportional price vectors")]
    DegenerateBudgets { first: usize, second: usize },
    #[error("period {period}: no patch attains margin {delta}")]
    InfeasibleMargin { period: usize, delta: f64 },
    #[error("margin must be positive, got {0}")]
    BadMargin(f64),
    #[error("period {period}: bundle lies on the budget hyperplane of period {other}")]
    OnBoundary { period: usize, other: usize },
    #[error("period {period}: bundle sign vector was not enumerated")]
    UnknownPatch { period: usize },
    #[error("period {period}: bundle must be nonnegative with positive expenditure")]
    InvalidBundle { period: usize },
    #[error("period {period} out of range")]
    BadPeriod { period: usize },
    #[error("period {period}: {found} patch counts given, structure has {expected} patches")]
    CountMismatch {
        period: usize,
        expected: usize,
        found: usize,
    },
    #[error("period {period} has no observations")]
    NoObservations { period: usize },
    #[error(transparent)]
    Inducement(#[from] InducementError),
}

/// How an observed bundle lying on a budget hyperplane is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Fail with `OnBoundary`.
    #[default]
    Error,
    /// Resolve the tie as "no preference" (`σ_j = +1`).
    NoPreference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observations {
    /// Per period, the observed bundles.
    Bundles(Vec<Vec<Vec<f64>>>),
    /// Per period, observation counts per patch index.
    PatchCounts(Vec<Vec<u64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    prices: Vec<Vec<f64>>,
    observations: Observations,
}

impl Dataset {
    pub fn new(prices: Vec<Vec<f64>>, observations: Observations) -> Result<Self, GeometryError> {
        validate_prices(&prices)?;
        let periods = prices.len();
        let goods = prices[0].len();
        match &observations {
            Observations::Bundles(b) => {
                if b.len() != periods {
                    return Err(GeometryError::BadPeriod { period: b.len() });
                }
                for (t, bundles) in b.iter().enumerate() {
                    if bundles.is_empty() {
                        return Err(GeometryError::NoObservations { period: t });
                    }
                    for q in bundles {
                        if q.len() != goods {
                            return Err(GeometryError::GoodsMismatch {
                                period: t,
                                expected: goods,
                                found: q.len(),
                            });
                        }
                        if q.iter().any(|&v| !v.is_finite() || v < 0.0)
                            || dot(&prices[t], q) <= 0.0
                        {
                            return Err(GeometryError::InvalidBundle { period: t });
                        }
                    }
                }
            }
            Observations::PatchCounts(c) => {
                if c.len() != periods {
                    return Err(GeometryError::BadPeriod { period: c.len() });
                }
                for (t, counts) in c.iter().enumerate() {
                    if counts.iter().sum::<u64>() == 0 {
                        return Err(GeometryError::NoObservations { period: t });
                    }
                }
            }
        }
        Ok(Dataset {
            prices,
            observations,
        })
    }

    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn observations(&self) -> &Observations {
        &self.observations
    }

    pub fn periods(&self) -> usize {
        self.prices.len()
    }

    pub fn goods(&self) -> usize {
        self.prices[0].len()
    }

    /// Observations per period, `N_t`.
    pub fn period_sizes(&self) -> Vec<u64> {
        match &self.observations {
            Observations::Bundles(b) => b.iter().map(|v| v.len() as u64).collect(),
            Observations::PatchCounts(c) => c.iter().map(|v| v.iter().sum()).collect(),
        }
    }

    /// Total observations `N = Σ_t N_t`.
    pub fn total_observations(&self) -> u64 {
        self.period_sizes().iter().sum()
    }
}

fn validate_prices(prices: &[Vec<f64>]) -> Result<(), GeometryError> {
    if prices.is_empty() {
        return Err(GeometryError::NoPeriods);
    }
    if prices.len() > MAX_PERIODS {
        return Err(GeometryError::TooManyPeriods(prices.len()));
    }
    let goods = prices[0].len();
    if goods == 0 {
        return Err(GeometryError::GoodsMismatch {
            period: 0,
            expected: 1,
            found: 0,
        });
    }
    for (t, p) in prices.iter().enumerate() {
        if p.len() != goods {
            return Err(GeometryError::GoodsMismatch {
                period: t,
                expected: goods,
                found: p.len(),
            });
        }
        if let Some(&value) = p.iter().find(|&&v| !v.is_finite() || v <= 0.0) {
            return Err(GeometryError::NonPositivePrice { period: t, value });
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn proportional(a: &[f64], b: &[f64]) -> bool {
    let ratio = b[0] / a[0];
    a.iter()
        .zip(b)
        .all(|(x, y)| (y - ratio * x).abs() <= 1e-12 * y.abs().max(ratio * x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    /// `σ_j` for every period `j != t`, in increasing `j`.
    pub signs: Vec<i8>,
    /// A bundle on the unit simplex realising the sign vector.
    pub witness: Vec<f64>,
    /// Best attainable margin in price-normalised units; `None` when the
    /// period has no other periods to compare against.
    pub margin: Option<f64>,
}

/// A realised sign vector whose best margin fell short of `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPatch {
    pub period: usize,
    pub signs: Vec<i8>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchStructure {
    prices: Vec<Vec<f64>>,
    delta: f64,
    patches: Vec<Vec<Patch>>,
    inducement: Inducement,
    dropped: Vec<DroppedPatch>,
    lookup: Vec<HashMap<u64, usize>>,
}

/// Convert a sign vector for period `t` into its `X[t][i][·]` bitmask.
fn signs_to_mask(t: usize, signs: &[i8]) -> u64 {
    let others = (0..signs.len() + 1).filter(|&j| j != t);
    others
        .zip(signs)
        .filter(|(_, &s)| s < 0)
        .fold(0u64, |m, (j, _)| m | (1u64 << j))
}

impl PatchStructure {
    fn assemble(
        prices: Vec<Vec<f64>>,
        delta: f64,
        patches: Vec<Vec<Patch>>,
        dropped: Vec<DroppedPatch>,
    ) -> Result<Self, GeometryError> {
        let below: Vec<Vec<u64>> = patches
            .iter()
            .enumerate()
            .map(|(t, ps)| ps.iter().map(|p| signs_to_mask(t, &p.signs)).collect())
            .collect();
        let lookup = below
            .iter()
            .map(|masks| masks.iter().enumerate().map(|(i, &m)| (m, i)).collect())
            .collect();
        let inducement = Inducement::new(below)?;
        Ok(PatchStructure {
            prices,
            delta,
            patches,
            inducement,
            dropped,
            lookup,
        })
    }

    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn periods(&self) -> usize {
        self.prices.len()
    }

    pub fn goods(&self) -> usize {
        self.prices[0].len()
    }

    pub fn patches(&self, t: usize) -> &[Patch] {
        &self.patches[t]
    }

    pub fn patch_counts(&self) -> Vec<usize> {
        self.inducement.patch_counts()
    }

    pub fn inducement(&self) -> &Inducement {
        &self.inducement
    }

    /// Realised sign vectors discarded because their margin was below `δ`.
    pub fn dropped(&self) -> &[DroppedPatch] {
        &self.dropped
    }

    /// Locate the patch containing bundle `q` in period `t`.
    pub fn patch_of_bundle(
        &self,
        t: usize,
        q: &[f64],
        tie_eps: f64,
        policy: TiePolicy,
    ) -> Result<usize, GeometryError> {
        if t >= self.periods() {
            return Err(GeometryError::BadPeriod { period: t });
        }
        let pt = &self.prices[t];
        if q.len() != pt.len() || q.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(GeometryError::InvalidBundle { period: t });
        }
        let spend = dot(pt, q);
        if spend.is_nan() || spend <= 0.0 {
            return Err(GeometryError::InvalidBundle { period: t });
        }
        let mut mask = 0u64;
        for (j, pj) in self.prices.iter().enumerate() {
            if j == t {
                continue;
            }
            let gap = dot(pj, q) - spend;
            if gap.abs() <= tie_eps * spend {
                match policy {
                    TiePolicy::Error => {
                        return Err(GeometryError::OnBoundary {
                            period: t,
                            other: j,
                        })
                    }
                    TiePolicy::NoPreference => continue,
                }
            }
            if gap < 0.0 {
                mask |= 1u64 << j;
            }
        }
        self.lookup[t]
            .get(&mask)
            .copied()
            .ok_or(GeometryError::UnknownPatch { period: t })
    }

    pub fn to_file(&self) -> PatchFile {
        PatchFile {
            version: PATCH_FILE_VERSION,
            delta: self.delta,
            prices: self.prices.clone(),
            patches: self.patches.clone(),
            x: self.inducement.to_dense(),
            dropped: self.dropped.clone(),
        }
    }

    /// Rebuild from a JSON fixture, checking that the stored tensor agrees
    /// with the sign vectors.
    pub fn from_file(file: PatchFile) -> Result<Self, PatchFileError> {
        if file.version != PATCH_FILE_VERSION {
            return Err(PatchFileError::Version(file.version));
        }
        validate_prices(&file.prices)?;
        if file.patches.len() != file.prices.len() {
            return Err(PatchFileError::Inconsistent("period count".into()));
        }
        let structure = PatchStructure::assemble(file.prices, file.delta, file.patches, file.dropped)?;
        if structure.inducement.to_dense() != file.x {
            return Err(PatchFileError::Inconsistent(
                "X tensor disagrees with sign vectors".into(),
            ));
        }
        Ok(structure)
    }
}

pub const PATCH_FILE_VERSION: u32 = 1;

/// JSON fixture form of a [`PatchStructure`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchFile {
    pub version: u32,
    pub delta: f64,
    pub prices: Vec<Vec<f64>>,
    pub patches: Vec<Vec<Patch>>,
    /// `x[t][i][j]`: patch `i` of period `t` reveals `p_j` preferred to `p_t`.
    pub x: Vec<Vec<Vec<bool>>>,
    #[serde(default)]
    pub dropped: Vec<DroppedPatch>,
}

#[derive(Debug, Error)]
pub enum PatchFileError {
    #[error("unsupported patch file version {0}")]
    Version(u32),
    #[error("inconsistent patch file: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Best margin over the unit simplex for the given signed hyperplanes.
///
/// Rows are `(direction, sign)`; returns `(margin, witness)` maximising
/// `min_k sign_k · direction_k · q`.
fn max_margin(goods: usize, rows: &[(&[f64], i8)]) -> (f64, Vec<f64>) {
    // directions are price differences scaled into [-1, 1], so margins lie
    // in [-1, 1] and `shift` keeps the shifted margin variable nonnegative
    let shift = 2.0;
    let mut constraints: Vec<Constraint> = rows
        .iter()
        .map(|(d, s)| {
            let mut coeffs: Vec<f64> = d.iter().map(|v| -(*s as f64) * v).collect();
            coeffs.push(1.0);
            Constraint {
                coeffs,
                relation: Relation::Le,
                rhs: shift,
            }
        })
        .collect();
    let mut simplex_row = vec![1.0; goods];
    simplex_row.push(0.0);
    constraints.push(Constraint {
        coeffs: simplex_row,
        relation: Relation::Eq,
        rhs: 1.0,
    });
    let mut objective = vec![0.0; goods];
    objective.push(1.0);
    let sol = simplex::maximize(&objective, &constraints)
        .expect("margin program is feasible and bounded by construction");
    let mut witness = sol.x[..goods].to_vec();
    let total: f64 = witness.iter().sum();
    for w in witness.iter_mut() {
        *w /= total;
    }
    // recompute the margin at the normalised witness rather than trusting
    // the tableau value
    let margin = rows
        .iter()
        .map(|(d, s)| *s as f64 * dot(d, &witness))
        .fold(f64::INFINITY, f64::min);
    (margin, witness)
}

/// Enumerate every realised patch of every period.
pub fn enumerate_patches(prices: &[Vec<f64>], delta: f64) -> Result<PatchStructure, GeometryError> {
    validate_prices(prices)?;
    if delta.is_nan() || delta <= 0.0 {
        return Err(GeometryError::BadMargin(delta));
    }
    let periods = prices.len();
    let goods = prices[0].len();
    for a in 0..periods {
        for b in a + 1..periods {
            if proportional(&prices[a], &prices[b]) {
                return Err(GeometryError::DegenerateBudgets {
                    first: a,
                    second: b,
                });
            }
        }
    }
    let scale = prices
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v));
    let mut all_patches = Vec::with_capacity(periods);
    let mut dropped = Vec::new();
    for t in 0..periods {
        let directions: Vec<Vec<f64>> = (0..periods)
            .filter(|&j| j != t)
            .map(|j| {
                prices[j]
                    .iter()
                    .zip(&prices[t])
                    .map(|(a, b)| (a - b) / scale)
                    .collect()
            })
            .collect();
        let mut found = Vec::new();
        if directions.is_empty() {
            found.push(Patch {
                signs: Vec::new(),
                witness: vec![1.0 / goods as f64; goods],
                margin: None,
            });
        } else {
            let mut signs = Vec::with_capacity(directions.len());
            search_signs(
                goods,
                &directions,
                &mut signs,
                delta,
                t,
                &mut found,
                &mut dropped,
            );
        }
        if found.is_empty() {
            return Err(GeometryError::InfeasibleMargin { period: t, delta });
        }
        all_patches.push(found);
    }
    for d in &dropped {
        log::warn!(
            "period {}: patch {:?} dropped, margin {:.3e} below {:.3e}",
            d.period,
            d.signs,
            d.margin,
            delta
        );
    }
    PatchStructure::assemble(prices.to_vec(), delta, all_patches, dropped)
}

// Depth-first over sign prefixes in lexicographic order (-1 before +1);
// any prefix without positive margin has no realised extension.
fn search_signs(
    goods: usize,
    directions: &[Vec<f64>],
    signs: &mut Vec<i8>,
    delta: f64,
    period: usize,
    found: &mut Vec<Patch>,
    dropped: &mut Vec<DroppedPatch>,
) {
    let depth = signs.len();
    for sign in [-1i8, 1] {
        signs.push(sign);
        let rows: Vec<(&[f64], i8)> = directions[..=depth]
            .iter()
            .zip(signs.iter())
            .map(|(d, &s)| (d.as_slice(), s))
            .collect();
        let (margin, witness) = max_margin(goods, &rows);
        if margin > REALIZED_EPS {
            if depth + 1 == directions.len() {
                if margin >= delta {
                    found.push(Patch {
                        signs: signs.clone(),
                        witness,
                        margin: Some(margin),
                    });
                } else {
                    dropped.push(DroppedPatch {
                        period,
                        signs: signs.clone(),
                        margin,
                    });
                }
            } else {
                search_signs(goods, directions, signs, delta, period, found, dropped);
            }
        }
        signs.pop();
    }
}

/// Empirical choice frequencies over all `(t, i)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequencies {
    /// `π̂` laid out period by period.
    pub pi: Vec<f64>,
    /// Observation counts, same layout as `pi`.
    pub counts: Vec<u64>,
    /// `N_t` per period.
    pub period_sizes: Vec<u64>,
}

impl Frequencies {
    /// Build from per-period count vectors.
    pub fn from_counts(counts: &[Vec<u64>]) -> Result<Self, GeometryError> {
        let mut pi = Vec::new();
        let mut flat = Vec::new();
        let mut sizes = Vec::with_capacity(counts.len());
        for (t, c) in counts.iter().enumerate() {
            let n: u64 = c.iter().sum();
            if n == 0 {
                return Err(GeometryError::NoObservations { period: t });
            }
            sizes.push(n);
            pi.extend(c.iter().map(|&k| k as f64 / n as f64));
            flat.extend_from_slice(c);
        }
        Ok(Frequencies {
            pi,
            counts: flat,
            period_sizes: sizes,
        })
    }

    pub fn total_observations(&self) -> u64 {
        self.period_sizes.iter().sum()
    }

    /// Per-period count vectors.
    pub fn period_counts(&self, x: &Inducement) -> Vec<Vec<u64>> {
        (0..x.periods())
            .map(|t| {
                let o = x.offset(t);
                self.counts[o..o + x.patch_count(t)].to_vec()
            })
            .collect()
    }
}

/// Per-period patch counts for a dataset.
pub fn patch_counts(
    dataset: &Dataset,
    structure: &PatchStructure,
    tie_eps: f64,
    policy: TiePolicy,
) -> Result<Vec<Vec<u64>>, GeometryError> {
    let sizes = structure.patch_counts();
    match dataset.observations() {
        Observations::Bundles(bundles) => {
            let mut counts: Vec<Vec<u64>> = sizes.iter().map(|&n| vec![0; n]).collect();
            for (t, period) in bundles.iter().enumerate() {
                for q in period {
                    let i = structure.patch_of_bundle(t, q, tie_eps, policy)?;
                    counts[t][i] += 1;
                }
            }
            Ok(counts)
        }
        Observations::PatchCounts(c) => {
            for (t, (row, &n)) in c.iter().zip(&sizes).enumerate() {
                if row.len() != n {
                    return Err(GeometryError::CountMismatch {
                        period: t,
                        expected: n,
                        found: row.len(),
                    });
                }
            }
            Ok(c.clone())
        }
    }
}

/// `π̂_{t,i} = count_{t,i} / N_t`.
pub fn empirical_frequencies(
    dataset: &Dataset,
    structure: &PatchStructure,
    tie_eps: f64,
    policy: TiePolicy,
) -> Result<Frequencies, GeometryError> {
    if dataset.periods() != structure.periods() {
        return Err(GeometryError::BadPeriod {
            period: dataset.periods(),
        });
    }
    Frequencies::from_counts(&patch_counts(dataset, structure, tie_eps, policy)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_period() -> PatchStructure {
        enumerate_patches(&[vec![1.0, 2.0], vec![2.0, 1.0]], DEFAULT_DELTA).unwrap()
    }

    #[test]
    fn single_period_has_one_empty_patch() {
        let s = enumerate_patches(&[vec![1.0, 3.0, 2.0]], DEFAULT_DELTA).unwrap();
        assert_eq!(s.patch_counts(), vec![1]);
        assert!(s.patches(0)[0].signs.is_empty());
        assert_eq!(s.inducement().below(0, 0), 0);
    }

    #[test]
    fn crossing_pair_has_two_patches_each() {
        let s = two_period();
        assert_eq!(s.patch_counts(), vec![2, 2]);
        // lexicographic: sigma = (-1) first
        assert_eq!(s.patches(0)[0].signs, vec![-1]);
        assert_eq!(s.patches(0)[1].signs, vec![1]);
        assert!(s.inducement().x(0, 0, 1));
        assert!(!s.inducement().x(0, 1, 1));
    }

    #[test]
    fn bundle_lookup_matches_direct_signs() {
        let s = two_period();
        let pol = TiePolicy::Error;
        // q=(1,0): p2·q = 2 > p1·q = 1 -> sigma = +1
        let i = s.patch_of_bundle(0, &[1.0, 0.0], DEFAULT_TIE_EPS, pol).unwrap();
        assert_eq!(s.patches(0)[i].signs, vec![1]);
        let i = s.patch_of_bundle(0, &[0.0, 1.0], DEFAULT_TIE_EPS, pol).unwrap();
        assert_eq!(s.patches(0)[i].signs, vec![-1]);
        assert!(s.inducement().x(0, i, 1));
        assert_eq!(
            s.patch_of_bundle(0, &[1.0, 1.0], DEFAULT_TIE_EPS, pol),
            Err(GeometryError::OnBoundary { period: 0, other: 1 })
        );
        let i = s
            .patch_of_bundle(0, &[1.0, 1.0], DEFAULT_TIE_EPS, TiePolicy::NoPreference)
            .unwrap();
        assert_eq!(s.patches(0)[i].signs, vec![1]);
    }

    #[test]
    fn proportional_prices_are_degenerate() {
        let err = enumerate_patches(&[vec![1.0, 2.0], vec![2.0, 4.0]], DEFAULT_DELTA).unwrap_err();
        assert_eq!(err, GeometryError::DegenerateBudgets { first: 0, second: 1 });
    }

    #[test]
    fn oversized_margin_is_infeasible() {
        let err = enumerate_patches(&[vec![1.0, 2.0], vec![2.0, 1.0]], 0.9).unwrap_err();
        assert!(matches!(err, GeometryError::InfeasibleMargin { .. }));
    }

    #[test]
    fn bad_prices_rejected() {
        assert!(matches!(
            enumerate_patches(&[vec![1.0, 0.0]], DEFAULT_DELTA),
            Err(GeometryError::NonPositivePrice { .. })
        ));
        assert!(matches!(
            enumerate_patches(&[vec![1.0, 1.0], vec![1.0]], DEFAULT_DELTA),
            Err(GeometryError::GoodsMismatch { .. })
        ));
        assert_eq!(enumerate_patches(&[], DEFAULT_DELTA).unwrap_err(), GeometryError::NoPeriods);
    }

    #[test]
    fn witnesses_map_back_to_their_patch() {
        let prices = vec![
            vec![1.0, 2.0, 3.0],
            vec![3.0, 1.0, 2.0],
            vec![2.0, 3.0, 1.0],
            vec![1.5, 1.5, 2.5],
        ];
        let s = enumerate_patches(&prices, DEFAULT_DELTA).unwrap();
        for t in 0..s.periods() {
            for (i, p) in s.patches(t).iter().enumerate() {
                let got = s.patch_of_bundle(t, &p.witness, 0.0, TiePolicy::Error).unwrap();
                assert_eq!(got, i);
                assert!(p.margin.unwrap() >= DEFAULT_DELTA);
            }
        }
    }

    #[test]
    fn frequencies_from_counts() {
        let f = Frequencies::from_counts(&[vec![3, 1], vec![0, 4]]).unwrap();
        assert_eq!(f.pi, vec![0.75, 0.25, 0.0, 1.0]);
        assert_eq!(f.total_observations(), 8);
        assert!(Frequencies::from_counts(&[vec![0, 0]]).is_err());
    }

    #[test]
    fn count_input_must_match_structure() {
        let s = two_period();
        let d = Dataset::new(
            s.prices().to_vec(),
            Observations::PatchCounts(vec![vec![1, 2, 3], vec![1, 1]]),
        )
        .unwrap();
        assert!(matches!(
            empirical_frequencies(&d, &s, DEFAULT_TIE_EPS, TiePolicy::Error),
            Err(GeometryError::CountMismatch { period: 0, .. })
        ));
    }

    #[test]
    fn patch_file_roundtrip() {
        let s = two_period();
        let json = serde_json::to_string(&s.to_file()).unwrap();
        let back = PatchStructure::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
        let mut bad = s.to_file();
        bad.x[0][0][1] = false;
        assert!(PatchStructure::from_file(bad).is_err());
    }
}
