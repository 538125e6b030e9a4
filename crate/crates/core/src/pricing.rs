//! Pricing: find a rational choice type maximising `s · a_r`.
//!
//! A type is rational exactly when its picks are consistent with some
//! ordering of the periods, so pricing is an ordering problem. Three solvers:
//! the best-insertion heuristic, an exact dynamic program over the set of
//! periods ranked last, and an exact best-first branch-and-bound over partial
//! picks for horizons too long for the dynamic program.

use std::cmp::Ordering as CmpOrdering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choice_types::{is_rational, ChoiceType, Closure};
use crate::inducement::Inducement;

/// Strict improvement required before a priced column is accepted.
pub const DEFAULT_EPS_CG: f64 = 1e-9;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub column: ChoiceType,
    pub value: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("exact pricing timed out after {nodes} nodes (upper bound {upper_bound})")]
    TimedOut {
        best: Option<Candidate>,
        upper_bound: f64,
        nodes: usize,
    },
    #[error("inducement tensor admits no rational choice type")]
    ContractViolation,
    #[error("residual has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Value of the dummy patch used when an ordering leaves a period without
/// any consistent patch.
pub fn dummy_value(s: &[f64]) -> f64 {
    -(1.0 + s.iter().map(|v| v.abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderValue {
    pub value: f64,
    /// Best consistent patch per period; `None` for periods outside the
    /// ordering or where only the dummy patch fits.
    pub picks: Vec<Option<usize>>,
    /// Every ordered period found a real patch.
    pub feasible: bool,
}

/// Best picks consistent with `order`: each period may only use a patch
/// revealing none of the periods ranked after it as preferred, so every
/// induced relation points from an earlier to a later period.
pub fn order_value(order: &[usize], s: &[f64], x: &Inducement) -> OrderValue {
    let dummy = dummy_value(s);
    let mut picks = vec![None; x.periods()];
    let mut later = 0u64;
    let mut value = 0.0;
    let mut feasible = true;
    for &t in order.iter().rev() {
        let block = x.block(s, t);
        let best = x
            .period_masks(t)
            .iter()
            .enumerate()
            .filter(|(_, &m)| m & later == 0)
            .fold(None::<(usize, f64)>, |acc, (i, _)| match acc {
                Some((_, v)) if v >= block[i] => acc,
                _ => Some((i, block[i])),
            });
        match best {
            Some((i, v)) => {
                picks[t] = Some(i);
                value += v;
            }
            None => {
                feasible = false;
                value += dummy;
            }
        }
        later |= 1u64 << t;
    }
    OrderValue {
        value,
        picks,
        feasible,
    }
}

/// Best insertion heuristic with `restarts` random insertion sequences.
/// Returns the distinct rational candidates found, best first.
pub fn best_insertion<R: Rng + ?Sized>(
    s: &[f64],
    x: &Inducement,
    rng: &mut R,
    restarts: usize,
) -> Vec<Candidate> {
    let n = x.periods();
    let mut out: Vec<Candidate> = Vec::new();
    let mut sequence: Vec<usize> = (0..n).collect();
    for _ in 0..restarts.max(1) {
        sequence.shuffle(rng);
        let mut order = Vec::with_capacity(n);
        order.push(sequence[0]);
        for &t in &sequence[1..] {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..=order.len() {
                order.insert(j, t);
                let v = order_value(&order, s, x).value;
                order.remove(j);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            let (j, _) = best.expect("at least one insertion position");
            order.insert(j, t);
        }
        let ov = order_value(&order, s, x);
        if !ov.feasible {
            continue;
        }
        let column = ChoiceType::new(ov.picks.iter().map(|p| p.expect("feasible")).collect());
        debug_assert!(is_rational(&column, x));
        if !out.iter().any(|c| c.column == column) {
            out.push(Candidate {
                column,
                value: ov.value,
            });
        }
    }
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExactLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPricing {
    pub best: Candidate,
    /// Always true for a returned value; limits surface as `TimedOut`.
    pub proven_optimal: bool,
    pub nodes: usize,
}

const UNFIXED: usize = usize::MAX;

struct Node {
    bound: f64,
    value: f64,
    seq: u64,
    picks: Vec<usize>,
    closure: Closure,
    fixed: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == CmpOrdering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap on bound, then oldest first
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Max `s` over the patches of `t` that close no cycle; `None` if all do.
fn best_feasible(x: &Inducement, s: &[f64], closure: &Closure, t: usize) -> Option<f64> {
    let block = x.block(s, t);
    x.period_masks(t)
        .iter()
        .enumerate()
        .filter(|(_, &m)| !closure.creates_cycle(t, m))
        .map(|(i, _)| block[i])
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

/// Optimistic completion value of a node, or `None` when some unfixed
/// period has no feasible patch left.
fn node_bound(x: &Inducement, s: &[f64], picks: &[usize], closure: &Closure) -> Option<f64> {
    let mut extra = 0.0;
    for (t, &p) in picks.iter().enumerate() {
        if p == UNFIXED {
            extra += best_feasible(x, s, closure, t)?;
        }
    }
    Some(extra)
}

/// Longest horizon solved by [`subset_dp`] inside [`exact_pricing`].
pub const DP_MAX_PERIODS: usize = 22;

fn check_dim(s: &[f64], x: &Inducement) -> Result<(), PricingError> {
    if s.len() != x.dim() {
        return Err(PricingError::Dimension {
            expected: x.dim(),
            found: s.len(),
        });
    }
    Ok(())
}

/// Exact maximiser of `s · a_r` over rational types.
pub fn exact_pricing(s: &[f64], x: &Inducement, limits: &ExactLimits) -> Result<ExactPricing, PricingError> {
    if x.periods() <= DP_MAX_PERIODS {
        subset_dp(s, x, limits)
    } else {
        branch_and_bound(s, x, limits)
    }
}

/// `f(E)` is the best value of the periods in `E` when they are ranked
/// after every other period; a period placed first within `E` may only use
/// patches revealing none of the rest of `E` as preferred.
pub fn subset_dp(s: &[f64], x: &Inducement, limits: &ExactLimits) -> Result<ExactPricing, PricingError> {
    check_dim(s, x)?;
    let n = x.periods();
    if n > DP_MAX_PERIODS {
        return Err(PricingError::Dimension {
            expected: DP_MAX_PERIODS,
            found: n,
        });
    }
    let start = Instant::now();
    // patches of each period by decreasing value, lowest index first on ties
    let sorted: Vec<Vec<(f64, u64, usize)>> = (0..n)
        .map(|t| {
            let block = x.block(s, t);
            let mut v: Vec<(f64, u64, usize)> = x
                .period_masks(t)
                .iter()
                .enumerate()
                .map(|(i, &m)| (block[i], m, i))
                .collect();
            v.sort_by(|a, b| b.0.total_cmp(&a.0));
            v
        })
        .collect();
    let best_patch = |t: usize, later: u64| sorted[t].iter().find(|(_, m, _)| m & later == 0);
    let size = 1usize << n;
    let mut f = vec![f64::NEG_INFINITY; size];
    let mut arg = vec![u8::MAX; size];
    f[0] = 0.0;
    for e in 1..size {
        if e % 4096 == 0 {
            let over_nodes = limits.node_limit.is_some_and(|l| e > l);
            if over_nodes || limits.time_limit.is_some_and(|l| start.elapsed() >= l) {
                return Err(PricingError::TimedOut {
                    best: None,
                    upper_bound: f64::INFINITY,
                    nodes: e,
                });
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_t = u8::MAX;
        let mut rest_bits = e as u64;
        while rest_bits != 0 {
            let t = rest_bits.trailing_zeros() as usize;
            rest_bits &= rest_bits - 1;
            let rest = e & !(1usize << t);
            if f[rest] == f64::NEG_INFINITY {
                continue;
            }
            if let Some(&(v, _, _)) = best_patch(t, rest as u64) {
                let cand = f[rest] + v;
                if cand > best {
                    best = cand;
                    best_t = t as u8;
                }
            }
        }
        f[e] = best;
        arg[e] = best_t;
    }
    let full = size - 1;
    if f[full] == f64::NEG_INFINITY {
        return Err(PricingError::ContractViolation);
    }
    let mut picks = vec![0; n];
    let mut e = full;
    while e != 0 {
        let t = arg[e] as usize;
        let rest = e & !(1usize << t);
        picks[t] = best_patch(t, rest as u64).expect("recorded choice is feasible").2;
        e = rest;
    }
    let column = ChoiceType::new(picks);
    debug_assert!(is_rational(&column, x));
    Ok(ExactPricing {
        best: Candidate {
            value: column.value(x, s),
            column,
        },
        proven_optimal: true,
        nodes: size,
    })
}

/// Best-first branch-and-bound over partial picks, keeping the preference
/// digraph transitively closed and rejecting picks that close a cycle.
pub fn branch_and_bound(s: &[f64], x: &Inducement, limits: &ExactLimits) -> Result<ExactPricing, PricingError> {
    check_dim(s, x)?;
    let n = x.periods();
    let start = Instant::now();
    let root_picks = vec![UNFIXED; n];
    let root_closure = Closure::new(n);
    let Some(root_bound) = node_bound(x, s, &root_picks, &root_closure) else {
        return Err(PricingError::ContractViolation);
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: root_bound,
        value: 0.0,
        seq,
        picks: root_picks,
        closure: root_closure,
        fixed: 0,
    });
    let mut incumbent: Option<Candidate> = None;
    let mut nodes = 0usize;
    while let Some(node) = heap.pop() {
        if node.fixed == n {
            return Ok(ExactPricing {
                best: Candidate {
                    column: ChoiceType::new(node.picks),
                    value: node.value,
                },
                proven_optimal: true,
                nodes,
            });
        }
        nodes += 1;
        let over_nodes = limits.node_limit.is_some_and(|l| nodes > l);
        let over_time = nodes.is_multiple_of(256)
            && limits.time_limit.is_some_and(|l| start.elapsed() >= l);
        if over_nodes || over_time {
            return Err(PricingError::TimedOut {
                best: incumbent,
                upper_bound: node.bound,
                nodes,
            });
        }
        // branch on the unfixed period with the fewest feasible patches
        let mut branch: Option<(usize, Vec<usize>)> = None;
        for t in 0..n {
            if node.picks[t] != UNFIXED {
                continue;
            }
            let feasible: Vec<usize> = x
                .period_masks(t)
                .iter()
                .enumerate()
                .filter(|(_, &m)| !node.closure.creates_cycle(t, m))
                .map(|(i, _)| i)
                .collect();
            if branch.as_ref().is_none_or(|(_, f)| feasible.len() < f.len()) {
                branch = Some((t, feasible));
            }
        }
        let (t, feasible) = branch.expect("node has an unfixed period");
        let block = x.block(s, t);
        for i in feasible {
            let mut closure = node.closure.clone();
            closure.add(t, x.below(t, i));
            let mut picks = node.picks.clone();
            picks[t] = i;
            let value = node.value + block[i];
            let Some(rest) = node_bound(x, s, &picks, &closure) else {
                continue;
            };
            let bound = value + rest;
            if incumbent.as_ref().is_some_and(|c| bound <= c.value) {
                continue;
            }
            let fixed = node.fixed + 1;
            if fixed == n && incumbent.as_ref().is_none_or(|c| value > c.value) {
                incumbent = Some(Candidate {
                    column: ChoiceType::new(picks.clone()),
                    value,
                });
            }
            seq += 1;
            heap.push(Node {
                bound,
                value,
                seq,
                picks,
                closure,
                fixed,
            });
        }
    }
    Err(PricingError::ContractViolation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    pub use_heuristic: bool,
    pub restarts: usize,
    pub eps_cg: f64,
    pub limits: ExactLimits,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            use_heuristic: true,
            restarts: DEFAULT_RESTARTS,
            eps_cg: DEFAULT_EPS_CG,
            limits: ExactLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingOutcome {
    /// An improving column, if one was found.
    pub column: Option<Candidate>,
    /// Proven optimum `z*`, available only when the exact solver ran.
    pub z_star: Option<f64>,
    /// Best column found by the exact solver (if it ran).
    pub exact_best: Option<Candidate>,
    pub exact_called: bool,
    pub heuristic_hit: bool,
    pub nodes: usize,
}

/// Heuristic first; the exact solver runs only when the heuristic fails to
/// beat `threshold + eps_cg`.
pub fn price<R: Rng + ?Sized>(
    s: &[f64],
    x: &Inducement,
    threshold: f64,
    config: &PricingConfig,
    rng: &mut R,
) -> Result<PricingOutcome, PricingError> {
    let target = threshold + config.eps_cg;
    if config.use_heuristic {
        if let Some(best) = best_insertion(s, x, rng, config.restarts).into_iter().next() {
            if best.value >= target {
                return Ok(PricingOutcome {
                    column: Some(best),
                    z_star: None,
                    exact_best: None,
                    exact_called: false,
                    heuristic_hit: true,
                    nodes: 0,
                });
            }
        }
    }
    let exact = exact_pricing(s, x, &config.limits)?;
    let z = exact.best.value;
    Ok(PricingOutcome {
        column: (z >= target).then(|| exact.best.clone()),
        z_star: Some(z),
        exact_best: Some(exact.best),
        exact_called: true,
        heuristic_hit: false,
        nodes: exact.nodes,
    })
}
