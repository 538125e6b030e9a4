//! Column generation for the projection onto the cone of rational types,
//! with restricted-master upper bounds and half-space lower bounds used to
//! classify a statistic against a reference value without full convergence.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choice_types::ChoiceType;
use crate::inducement::Inducement;
use crate::master::{solve_restricted, MasterConfig, MasterError, MasterSolution};
use crate::pricing::{price, PricingConfig, PricingError};

#[derive(Debug, Error)]
pub enum ColgenError {
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error("pricing failed at iteration {iteration} (restricted objective {upper_bound}): {source}")]
    Pricing {
        iteration: usize,
        upper_bound: f64,
        #[source]
        source: PricingError,
    },
    #[error("iteration limit {limit} reached; certificate gap {:?}", partial.certificate_gap)]
    IterationLimit {
        limit: usize,
        partial: Box<ProjectionResult>,
    },
    #[error("projection time limit reached after {iterations} iterations (restricted objective {upper_bound})")]
    TimedOut { upper_bound: f64, iterations: usize },
    #[error("lower bound requires a proven-optimal pricing value")]
    ContractViolation,
    #[error("target has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColgenConfig {
    pub master: MasterConfig,
    pub pricing: PricingConfig,
    /// `None` means `10 · Σ_t I_t`.
    pub iteration_limit: Option<usize>,
    /// Stop as soon as the restricted objective drops below the reference.
    pub use_upper_bound: bool,
    /// Stop as soon as a half-space lower bound exceeds the reference.
    pub use_lower_bound: bool,
    /// Wall-clock budget for one projection; also caps exact pricing.
    pub time_limit: Option<Duration>,
}

impl Default for ColgenConfig {
    fn default() -> Self {
        ColgenConfig {
            master: MasterConfig {
                tol: 1e-10,
                ..MasterConfig::default()
            },
            pricing: PricingConfig::default(),
            iteration_limit: None,
            use_upper_bound: false,
            use_lower_bound: false,
            time_limit: None,
        }
    }
}

/// Columns carried between solves, deduplicated by pick vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnPool {
    columns: Vec<ChoiceType>,
    seen: HashSet<ChoiceType>,
    /// Consecutive master solves in which each column had zero weight.
    idle: Vec<usize>,
    /// Passive set of the most recent master solve.
    warm: Vec<usize>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_columns(columns: impl IntoIterator<Item = ChoiceType>) -> Self {
        let mut pool = Self::new();
        for c in columns {
            pool.insert(c);
        }
        pool
    }

    pub fn columns(&self) -> &[ChoiceType] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn contains(&self, c: &ChoiceType) -> bool {
        self.seen.contains(c)
    }

    pub fn warm_set(&self) -> &[usize] {
        &self.warm
    }

    /// Returns false if the column was already present.
    pub fn insert(&mut self, c: ChoiceType) -> bool {
        if !self.seen.insert(c.clone()) {
            return false;
        }
        self.columns.push(c);
        self.idle.push(0);
        true
    }

    fn record(&mut self, sol: &MasterSolution) {
        for (idle, &w) in self.idle.iter_mut().zip(&sol.weights) {
            if w > 0.0 {
                *idle = 0;
            } else {
                *idle += 1;
            }
        }
        self.warm = sol.passive.clone();
    }

    /// Idle counters and warm set of `other` for columns it shares, keeping
    /// the smaller idle count; new columns are appended in `other`'s order.
    pub fn merge(&mut self, other: &ColumnPool) {
        let position: std::collections::HashMap<&ChoiceType, usize> =
            self.columns.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut idle_updates = Vec::new();
        let mut fresh = Vec::new();
        for (c, &idle) in other.columns.iter().zip(&other.idle) {
            match position.get(c) {
                Some(&i) => idle_updates.push((i, idle)),
                None => fresh.push((c.clone(), idle)),
            }
        }
        for (i, idle) in idle_updates {
            self.idle[i] = self.idle[i].min(idle);
        }
        for (c, idle) in fresh {
            self.seen.insert(c.clone());
            self.columns.push(c);
            self.idle.push(idle);
        }
        let index: std::collections::HashMap<&ChoiceType, usize> =
            self.columns.iter().enumerate().map(|(i, c)| (c, i)).collect();
        self.warm = other
            .warm
            .iter()
            .filter_map(|&i| other.columns.get(i).and_then(|c| index.get(c).copied()))
            .collect();
    }

    /// Drop columns idle for at least `window` master solves and not in the
    /// warm set. Returns the number removed.
    pub fn purge(&mut self, window: usize) -> usize {
        let warm: HashSet<usize> = self.warm.iter().copied().collect();
        let keep: Vec<bool> = self
            .idle
            .iter()
            .enumerate()
            .map(|(i, &idle)| idle < window || warm.contains(&i))
            .collect();
        let removed = keep.iter().filter(|k| !**k).count();
        if removed == 0 {
            return 0;
        }
        let mut remap = vec![usize::MAX; self.columns.len()];
        let mut columns = Vec::with_capacity(self.columns.len() - removed);
        let mut idle = Vec::with_capacity(columns.capacity());
        for (i, c) in self.columns.drain(..).enumerate() {
            if keep[i] {
                remap[i] = columns.len();
                columns.push(c);
                idle.push(self.idle[i]);
            } else {
                self.seen.remove(&c);
            }
        }
        self.columns = columns;
        self.idle = idle;
        self.warm = self.warm.iter().map(|&i| remap[i]).collect();
        removed
    }
}

/// Per-iteration trace record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub iteration: usize,
    pub objective: f64,
    pub threshold: f64,
    pub z_star: Option<f64>,
    pub lower_bound: Option<f64>,
    pub heuristic_hit: bool,
    pub event: TraceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    ColumnAdded,
    Converged,
    BelowRef,
    ExceedsRef,
}

pub type Trace<'a> = Option<&'a mut dyn FnMut(&TraceEvent)>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub iterations: usize,
    pub exact_pricing_calls: usize,
    pub heuristic_hits: usize,
    pub columns_generated: usize,
    pub nodes: usize,
}

impl WorkCounters {
    pub fn absorb(&mut self, other: &WorkCounters) {
        self.iterations += other.iterations;
        self.exact_pricing_calls += other.exact_pricing_calls;
        self.heuristic_hits += other.heuristic_hits;
        self.columns_generated += other.columns_generated;
        self.nodes += other.nodes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// `J = N ‖target - η̂‖²`.
    pub objective: f64,
    /// Projection of the target onto the cone.
    pub eta: Vec<f64>,
    pub residual: Vec<f64>,
    /// Weights aligned with `pool.columns()`.
    pub weights: Vec<f64>,
    pub pool: ColumnPool,
    pub counters: WorkCounters,
    /// `z* - s·v` from the last exact pricing, when it ran.
    pub certificate_gap: Option<f64>,
    /// Stopped because exact pricing certified optimality.
    pub converged: bool,
}

/// Classification of a statistic against a reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BoundedOutcome {
    Exact(f64),
    /// Lower bound strictly above the reference.
    ExceedsRef(f64),
    /// Upper bound strictly below the reference.
    BelowRef(f64),
}

impl BoundedOutcome {
    pub fn value(&self) -> f64 {
        match *self {
            BoundedOutcome::Exact(v) | BoundedOutcome::ExceedsRef(v) | BoundedOutcome::BelowRef(v) => v,
        }
    }

    /// Whether the statistic is at least the reference (ties count).
    pub fn at_least(&self, reference: f64) -> bool {
        match *self {
            BoundedOutcome::Exact(v) => v >= reference,
            BoundedOutcome::ExceedsRef(_) => true,
            BoundedOutcome::BelowRef(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedResult {
    pub outcome: BoundedOutcome,
    pub pool: ColumnPool,
    pub counters: WorkCounters,
}

/// Squared distance (times `N`) from `target` to the half-space
/// `{c : s·c ≤ z*}`, which contains the cone whenever `z*` is the exact
/// pricing optimum for residual `s`.
pub fn lower_bound(residual: &[f64], z_star: Option<f64>, target: &[f64], scale: f64) -> Result<f64, ColgenError> {
    let z = z_star.ok_or(ColgenError::ContractViolation)?;
    let norm2: f64 = residual.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Ok(0.0);
    }
    let excess = residual.iter().zip(target).map(|(a, b)| a * b).sum::<f64>() - z;
    Ok(if excess > 0.0 {
        scale * excess * excess / norm2
    } else {
        0.0
    })
}

/// Any restricted solution is feasible for the full problem.
pub fn upper_bound(solution: &MasterSolution) -> f64 {
    solution.objective
}

enum Stop {
    Converged,
    Below(f64),
    Exceeds(f64),
}

struct RunOutput {
    stop: Stop,
    solution: MasterSolution,
    pool: ColumnPool,
    counters: WorkCounters,
    certificate_gap: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run<R: Rng + ?Sized>(
    target: &[f64],
    x: &Inducement,
    scale: f64,
    reference: Option<f64>,
    mut pool: ColumnPool,
    config: &ColgenConfig,
    rng: &mut R,
    mut trace: Trace<'_>,
) -> Result<RunOutput, ColgenError> {
    if target.len() != x.dim() {
        return Err(ColgenError::Dimension {
            expected: x.dim(),
            found: target.len(),
        });
    }
    let limit = config.iteration_limit.unwrap_or(10 * x.dim()).max(1);
    let mut counters = WorkCounters::default();
    let mut certificate_gap = None;
    let start = Instant::now();
    let mut pricing_config = config.pricing;
    loop {
        let warm = pool.warm.clone();
        let sol = solve_restricted(x, &pool.columns, target, scale, Some(&warm), &config.master)?;
        pool.record(&sol);
        let upper = upper_bound(&sol);
        let threshold = sol.threshold();
        let mut emit = |kind: TraceKind, z: Option<f64>, lb: Option<f64>, hit: bool, it: usize| {
            if let Some(f) = trace.as_mut() {
                f(&TraceEvent {
                    iteration: it,
                    objective: upper,
                    threshold,
                    z_star: z,
                    lower_bound: lb,
                    heuristic_hit: hit,
                    event: kind,
                });
            }
        };
        if let Some(r) = reference {
            if config.use_upper_bound && upper < r {
                emit(TraceKind::BelowRef, None, None, false, counters.iterations);
                return Ok(RunOutput {
                    stop: Stop::Below(upper),
                    solution: sol,
                    pool,
                    counters,
                    certificate_gap,
                });
            }
        }
        if counters.iterations >= limit {
            let partial = finish(sol, pool, counters, certificate_gap, false);
            return Err(ColgenError::IterationLimit {
                limit,
                partial: Box::new(partial),
            });
        }
        if let Some(limit) = config.time_limit {
            let Some(left) = limit.checked_sub(start.elapsed()).filter(|d| !d.is_zero()) else {
                return Err(ColgenError::TimedOut {
                    upper_bound: upper,
                    iterations: counters.iterations,
                });
            };
            pricing_config.limits.time_limit = Some(config.pricing.limits.time_limit.map_or(left, |l| l.min(left)));
        }
        let outcome = match price(&sol.residual, x, threshold, &pricing_config, rng) {
            Ok(o) => o,
            Err(PricingError::TimedOut { .. }) if config.time_limit.is_some_and(|l| start.elapsed() >= l) => {
                return Err(ColgenError::TimedOut {
                    upper_bound: upper,
                    iterations: counters.iterations,
                })
            }
            Err(source) => {
                return Err(ColgenError::Pricing {
                    iteration: counters.iterations,
                    upper_bound: upper,
                    source,
                })
            }
        };
        counters.iterations += 1;
        counters.nodes += outcome.nodes;
        if outcome.exact_called {
            counters.exact_pricing_calls += 1;
        }
        if outcome.heuristic_hit {
            counters.heuristic_hits += 1;
        }
        let mut lb = None;
        if let Some(z) = outcome.z_star {
            certificate_gap = Some(z - threshold);
            if let (Some(r), true) = (reference, config.use_lower_bound) {
                let bound = lower_bound(&sol.residual, Some(z), target, scale)?;
                lb = Some(bound);
                if bound > r {
                    emit(TraceKind::ExceedsRef, Some(z), lb, false, counters.iterations);
                    return Ok(RunOutput {
                        stop: Stop::Exceeds(bound),
                        solution: sol,
                        pool,
                        counters,
                        certificate_gap,
                    });
                }
            }
        }
        match outcome.column {
            Some(c) if pool.insert(c.column.clone()) => {
                counters.columns_generated += 1;
                emit(
                    TraceKind::ColumnAdded,
                    outcome.z_star,
                    lb,
                    outcome.heuristic_hit,
                    counters.iterations,
                );
            }
            Some(c) => {
                // already pooled: the master solution is optimal for it up to
                // its own tolerance
                log::debug!("priced column {:?} already in pool; stopping", c.column.picks());
                emit(TraceKind::Converged, outcome.z_star, lb, outcome.heuristic_hit, counters.iterations);
                return Ok(RunOutput {
                    stop: Stop::Converged,
                    solution: sol,
                    pool,
                    counters,
                    certificate_gap,
                });
            }
            None => {
                emit(TraceKind::Converged, outcome.z_star, lb, false, counters.iterations);
                return Ok(RunOutput {
                    stop: Stop::Converged,
                    solution: sol,
                    pool,
                    counters,
                    certificate_gap,
                });
            }
        }
    }
}

fn finish(
    sol: MasterSolution,
    pool: ColumnPool,
    counters: WorkCounters,
    certificate_gap: Option<f64>,
    converged: bool,
) -> ProjectionResult {
    ProjectionResult {
        objective: sol.objective,
        eta: sol.projection,
        residual: sol.residual,
        weights: sol.weights,
        pool,
        counters,
        certificate_gap,
        converged,
    }
}

/// Project `target` onto the cone of all rational types.
pub fn project<R: Rng + ?Sized>(
    target: &[f64],
    x: &Inducement,
    scale: f64,
    pool: ColumnPool,
    config: &ColgenConfig,
    rng: &mut R,
    trace: Trace<'_>,
) -> Result<ProjectionResult, ColgenError> {
    let out = run(target, x, scale, None, pool, config, rng, trace)?;
    Ok(finish(
        out.solution,
        out.pool,
        out.counters,
        out.certificate_gap,
        true,
    ))
}

/// Like [`project`], but stops as soon as the statistic is certified to lie
/// strictly above or below `reference`.
#[allow(clippy::too_many_arguments)]
pub fn bounded_project<R: Rng + ?Sized>(
    target: &[f64],
    x: &Inducement,
    scale: f64,
    reference: f64,
    pool: ColumnPool,
    config: &ColgenConfig,
    rng: &mut R,
    trace: Trace<'_>,
) -> Result<BoundedResult, ColgenError> {
    let out = run(target, x, scale, Some(reference), pool, config, rng, trace)?;
    let outcome = match out.stop {
        Stop::Converged => BoundedOutcome::Exact(out.solution.objective),
        Stop::Below(v) => BoundedOutcome::BelowRef(v),
        Stop::Exceeds(v) => BoundedOutcome::ExceedsRef(v),
    };
    Ok(BoundedResult {
        outcome,
        pool: out.pool,
        counters: out.counters,
    })
}
