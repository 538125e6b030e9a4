//! End-to-end test: statistic, tightened estimator, recentered bootstrap and
//! p-value.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choice_types::{
    enumerate_rational_types, sample_rational_types, ChoiceType, RepairConfig, RepairWeights, TypeError,
};
use crate::colgen::{
    bounded_project, project, BoundedOutcome, ColgenConfig, ColgenError, ColumnPool, TraceEvent, WorkCounters,
};
use crate::geometry::{
    empirical_frequencies, enumerate_patches, Dataset, Frequencies, GeometryError, PatchStructure, TiePolicy,
    DEFAULT_DELTA, DEFAULT_TIE_EPS,
};
use crate::inducement::Inducement;
use crate::master::shift_vector;
use crate::pricing::PricingConfig;

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_SUBSET_SIZE: usize = 1000;
/// Above this many candidate types `R′` is sampled instead of enumerated.
pub const FULL_ENUMERATION_LIMIT: u64 = 10_000;
pub const DEFAULT_BATCH_SIZE: usize = 8;
pub const DEFAULT_PURGE_AFTER: usize = 50;
/// Statistics below this are reported as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
/// Replication statistics within this relative distance of `J_N` are ties.
pub const DEFAULT_COMPARE_RTOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Types(#[from] TypeError),
    #[error(transparent)]
    Colgen(#[from] ColgenError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Solver configuration used for the bootstrap replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every pricing problem solved exactly, no bounds.
    Exact,
    /// Best insertion first, exact pricing as fallback.
    Heur,
    /// `Heur`, stopping once the upper bound drops below `J_N`.
    HeurUb,
    /// `HeurUb`, also stopping once a lower bound exceeds `J_N`.
    HeurBounds,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Exact, Mode::Heur, Mode::HeurUb, Mode::HeurBounds];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Heur => "heur",
            Mode::HeurUb => "heur-ub",
            Mode::HeurBounds => "heur-bounds",
        }
    }

    fn colgen(&self, base: &ColgenConfig) -> ColgenConfig {
        ColgenConfig {
            pricing: PricingConfig {
                use_heuristic: *self != Mode::Exact,
                ..base.pricing
            },
            use_upper_bound: matches!(self, Mode::HeurUb | Mode::HeurBounds),
            use_lower_bound: *self == Mode::HeurBounds,
            ..*base
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (expected exact, heur, heur-ub or heur-bounds)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Tightening parameter; `None` selects `√(log N / N)`.
    pub tau: Option<f64>,
    pub bootstrap: usize,
    pub seed: u64,
    pub subset_size: usize,
    pub mode: Mode,
    /// Cap on the whole run; replications not started by then are skipped.
    pub time_limit: Option<Duration>,
    pub replication_time_limit: Option<Duration>,
    pub tie_policy: TiePolicy,
    pub tie_eps: f64,
    pub delta: f64,
    pub restarts: usize,
    /// Replications per pool snapshot.
    pub batch_size: usize,
    pub purge_after: Option<usize>,
    pub zero_tol: f64,
    /// Replications count as exceedances when `J* ≥ J_N (1 - compare_rtol)`.
    pub compare_rtol: f64,
    /// `None` means `10 · Σ_t I_t` per projection.
    pub iteration_limit: Option<usize>,
    /// Scores used when repairing sampled types for `R′`.
    pub repair_weights: RepairWeights,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            tau: None,
            bootstrap: 200,
            seed: 0,
            subset_size: DEFAULT_SUBSET_SIZE,
            mode: Mode::HeurBounds,
            time_limit: None,
            replication_time_limit: None,
            tie_policy: TiePolicy::default(),
            tie_eps: DEFAULT_TIE_EPS,
            delta: DEFAULT_DELTA,
            restarts: crate::pricing::DEFAULT_RESTARTS,
            batch_size: DEFAULT_BATCH_SIZE,
            purge_after: Some(DEFAULT_PURGE_AFTER),
            zero_tol: DEFAULT_ZERO_TOL,
            compare_rtol: DEFAULT_COMPARE_RTOL,
            iteration_limit: None,
            repair_weights: RepairWeights::default(),
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.bootstrap == 0 {
            return bad("bootstrap count must be at least 1");
        }
        if let Some(t) = self.tau {
            if !t.is_finite() || t < 0.0 {
                return bad("tau must be a finite non-negative number");
            }
            if t > 0.0 && self.subset_size == 0 {
                return bad("subset size must be at least 1 when tau > 0");
            }
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.zero_tol.is_nan() || self.zero_tol < 0.0 {
            return bad("zero tolerance must be non-negative");
        }
        if !(0.0..1.0).contains(&self.compare_rtol) {
            return bad("comparison tolerance must lie in [0, 1)");
        }
        Ok(())
    }

    fn colgen(&self) -> ColgenConfig {
        let base = ColgenConfig::default();
        ColgenConfig {
            pricing: PricingConfig {
                restarts: self.restarts,
                ..base.pricing
            },
            iteration_limit: self.iteration_limit,
            ..base
        }
    }
}

/// `√(log N / N)`, zero for `N ≤ 1`.
pub fn default_tau(n: u64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let n = n as f64;
    (n.ln() / n).sqrt()
}

/// Where the trace record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Statistic,
    Tightened,
    Replication,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub phase: Phase,
    pub replication: Option<usize>,
    #[serde(flatten)]
    pub event: TraceEvent,
}

pub type TraceSink<'a> = Option<&'a mut dyn FnMut(&TraceRecord)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Statistic {
    pub j: f64,
    pub eta: Vec<f64>,
    pub pool: ColumnPool,
    pub counters: WorkCounters,
}

fn clamp(v: f64, tol: f64) -> f64 {
    if v < tol {
        0.0
    } else {
        v
    }
}

fn forward<'a, 'b: 'a>(
    sink: &'a mut TraceSink<'b>,
    phase: Phase,
    replication: Option<usize>,
) -> Option<impl FnMut(&TraceEvent) + use<'a, 'b>> {
    sink.as_mut().map(move |f| {
        move |e: &TraceEvent| {
            f(&TraceRecord {
                phase,
                replication,
                event: e.clone(),
            })
        }
    })
}

/// `J_N = N ‖π̂ - η̂‖²` with `N = Σ_t N_t`.
pub fn compute_statistic<R: Rng + ?Sized>(
    x: &Inducement,
    freqs: &Frequencies,
    pool: ColumnPool,
    config: &ColgenConfig,
    zero_tol: f64,
    rng: &mut R,
    mut trace: TraceSink<'_>,
) -> Result<Statistic, ColgenError> {
    let n = freqs.total_observations() as f64;
    let mut fwd = forward(&mut trace, Phase::Statistic, None);
    let res = project(
        &freqs.pi,
        x,
        n,
        pool,
        config,
        rng,
        fwd.as_mut().map(|f| f as &mut dyn FnMut(&TraceEvent)),
    )?;
    Ok(Statistic {
        j: clamp(res.objective, zero_tol),
        eta: res.eta,
        pool: res.pool,
        counters: res.counters,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tightened {
    /// `η̂_τ`.
    pub eta: Vec<f64>,
    pub shift: Vec<f64>,
    pub pool: ColumnPool,
    pub counters: WorkCounters,
    pub negative_shift: bool,
}

/// `η̂_τ`: projection onto the cone with weights of the types in `subset`
/// bounded below by `τ/|subset|`, computed as `shift + proj(π̂ - shift)`.
#[allow(clippy::too_many_arguments)]
pub fn tightened_estimator<R: Rng + ?Sized>(
    pi: &[f64],
    tau: f64,
    subset: &[ChoiceType],
    x: &Inducement,
    scale: f64,
    pool: ColumnPool,
    config: &ColgenConfig,
    rng: &mut R,
    mut trace: TraceSink<'_>,
) -> Result<Tightened, PipelineError> {
    if tau > 0.0 && subset.is_empty() {
        return Err(PipelineError::Config("tau > 0 needs a non-empty type subset".into()));
    }
    let shift = shift_vector(x, tau, subset);
    let target: Vec<f64> = pi.iter().zip(&shift).map(|(a, b)| a - b).collect();
    let negative_shift = target.iter().any(|&v| v < 0.0);
    if negative_shift {
        log::debug!("tightening shift drives part of the target negative");
    }
    let mut fwd = forward(&mut trace, Phase::Tightened, None);
    let res = project(
        &target,
        x,
        scale,
        pool,
        config,
        rng,
        fwd.as_mut().map(|f| f as &mut dyn FnMut(&TraceEvent)),
    )?;
    let eta = res.eta.iter().zip(&shift).map(|(a, b)| a + b).collect();
    Ok(Tightened {
        eta,
        shift,
        pool: res.pool,
        counters: res.counters,
        negative_shift,
    })
}

/// Per period, `N_t` categorical draws from the observed counts.
pub fn bootstrap_frequencies<R: Rng + ?Sized>(freqs: &Frequencies, x: &Inducement, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; freqs.pi.len()];
    for t in 0..x.periods() {
        let o = x.offset(t);
        let counts = &freqs.counts[o..o + x.patch_count(t)];
        let n = freqs.period_sizes[t];
        let dist = WeightedIndex::new(counts).expect("period has observations");
        let mut draws = vec![0u64; counts.len()];
        for _ in 0..n {
            draws[dist.sample(rng)] += 1;
        }
        for (slot, d) in out[o..].iter_mut().zip(draws) {
            *slot = d as f64 / n as f64;
        }
    }
    out
}

/// `π̂* - π̂ + η̂_τ`.
pub fn recenter(pi_star: &[f64], pi: &[f64], eta_tau: &[f64]) -> Vec<f64> {
    pi_star
        .iter()
        .zip(pi)
        .zip(eta_tau)
        .map(|((a, b), c)| a - b + c)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReplicationOutcome {
    Exact { value: f64 },
    ExceedsRef { lower_bound: f64 },
    BelowRef { upper_bound: f64 },
    TimedOut { upper_bound: f64 },
    Failed,
}

impl ReplicationOutcome {
    fn from_bounded(b: BoundedOutcome, zero_tol: f64) -> Self {
        match b {
            BoundedOutcome::Exact(v) => ReplicationOutcome::Exact {
                value: clamp(v, zero_tol),
            },
            BoundedOutcome::ExceedsRef(v) => ReplicationOutcome::ExceedsRef { lower_bound: v },
            BoundedOutcome::BelowRef(v) => ReplicationOutcome::BelowRef { upper_bound: v },
        }
    }

    pub fn completed(&self) -> bool {
        !matches!(self, ReplicationOutcome::TimedOut { .. } | ReplicationOutcome::Failed)
    }

    /// Classified at least `reference` (ties count).
    pub fn at_least(&self, reference: f64) -> bool {
        match *self {
            ReplicationOutcome::Exact { value } => value >= reference,
            ReplicationOutcome::ExceedsRef { .. } => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub outcome: ReplicationOutcome,
    pub counters: WorkCounters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetSource {
    None,
    Enumerated,
    Sampled,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub statistic_seconds: f64,
    pub bootstrap_seconds: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub version: u32,
    pub data_digest: Option<String>,
    pub config: TestConfig,
    pub periods: usize,
    pub patch_counts: Vec<usize>,
    pub dropped_patches: usize,
    pub observations: u64,
    pub tau: f64,
    pub subset_size: usize,
    pub subset_source: SubsetSource,
    pub negative_shift: bool,
    pub j_stat: f64,
    /// Fraction of completed replications classified `≥ j_stat`, up to the
    /// relative comparison tolerance.
    pub p_value: Option<f64>,
    pub requested: usize,
    pub completed: usize,
    pub exceedances: usize,
    pub partial: bool,
    pub statistic_counters: WorkCounters,
    pub bootstrap_counters: WorkCounters,
    pub final_pool_size: usize,
    pub replications: Vec<ReplicationRecord>,
    pub timing: Timing,
}

impl TestReport {
    /// The report with all timing fields zeroed.
    pub fn without_timing(&self) -> TestReport {
        TestReport {
            timing: Timing::default(),
            ..self.clone()
        }
    }

    /// Plain-text table row in the layout `Periods Jstat Pval Mode Time Completed`.
    pub fn table(&self, label: &str) -> String {
        let pval = self.p_value.map_or("-".to_string(), |p| format!("{p:.2}"));
        format!(
            "{:<10} {:>10} {:>6} {:>12} {:>10} {:>10}\n{:<10} {:>10.4} {:>6} {:>12} {:>10.1} {:>10}\n",
            "Periods",
            "Jstat",
            "Pval",
            "Mode",
            "Time",
            "Completed",
            label,
            self.j_stat,
            pval,
            self.config.mode.as_str(),
            self.timing.wall_seconds,
            format!("{}/{}", self.completed, self.requested),
        )
    }
}

/// `R′`: every rational type when `Π I_t ≤ FULL_ENUMERATION_LIMIT`,
/// otherwise `subset_size` sampled ones.
pub fn build_subset<R: Rng + ?Sized>(
    x: &Inducement,
    subset_size: usize,
    weights: RepairWeights,
    rng: &mut R,
) -> Result<(Vec<ChoiceType>, SubsetSource), TypeError> {
    let repair = RepairConfig {
        weights,
        ..RepairConfig::default()
    };
    let product: BigUint = x.patch_counts().iter().map(|&n| BigUint::from(n)).product();
    if product <= BigUint::from(FULL_ENUMERATION_LIMIT) {
        return Ok((enumerate_rational_types(x, FULL_ENUMERATION_LIMIT)?, SubsetSource::Enumerated));
    }
    match sample_rational_types(x, subset_size, rng, &repair) {
        Ok(types) => Ok((types, SubsetSource::Sampled)),
        Err(TypeError::Exhausted { found, .. }) if found > 0 => {
            log::warn!("only {found} distinct rational types sampled; using those");
            Ok((
                sample_rational_types(x, found, rng, &repair)?,
                SubsetSource::Sampled,
            ))
        }
        Err(e) => Err(e),
    }
}

/// Run the full test on a dataset.
pub fn run_test(dataset: &Dataset, config: &TestConfig, trace: TraceSink<'_>) -> Result<TestReport, PipelineError> {
    config.validate()?;
    let structure = enumerate_patches(dataset.prices(), config.delta)?;
    let freqs = empirical_frequencies(dataset, &structure, config.tie_eps, config.tie_policy)?;
    let mut report = run_test_on(&structure, &freqs, config, trace)?;
    report.data_digest = Some(crate::io::data_digest(dataset));
    Ok(report)
}

/// Run the test on precomputed patches and frequencies.
pub fn run_test_on(
    structure: &PatchStructure,
    freqs: &Frequencies,
    config: &TestConfig,
    trace: TraceSink<'_>,
) -> Result<TestReport, PipelineError> {
    let mut report = run_test_inducement(structure.inducement(), freqs, config, trace)?;
    report.dropped_patches = structure.dropped().len();
    Ok(report)
}

/// Run the test directly on an inducement tensor.
pub fn run_test_inducement(
    x: &Inducement,
    freqs: &Frequencies,
    config: &TestConfig,
    mut trace: TraceSink<'_>,
) -> Result<TestReport, PipelineError> {
    config.validate()?;
    if freqs.pi.len() != x.dim() {
        return Err(PipelineError::Config(format!(
            "frequencies have dimension {}, expected {}",
            freqs.pi.len(),
            x.dim()
        )));
    }
    let start = Instant::now();
    let deadline = config.time_limit.map(|l| start + l);
    let n_obs = freqs.total_observations();
    let n = n_obs as f64;
    let tau = config.tau.unwrap_or_else(|| default_tau(n_obs));
    let base = config.colgen();
    // same in every mode so J_N and η̂_τ do not depend on it
    let stat_config = ColgenConfig {
        time_limit: config.time_limit,
        ..Mode::Heur.colgen(&base)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let stat = compute_statistic(
        x,
        freqs,
        ColumnPool::new(),
        &stat_config,
        config.zero_tol,
        &mut rng,
        trace.as_mut().map(|f| &mut **f as &mut dyn FnMut(&TraceRecord)),
    )?;
    let j_stat = stat.j;
    let reference = j_stat * (1.0 - config.compare_rtol);
    let (subset, source) = if tau > 0.0 {
        build_subset(x, config.subset_size, config.repair_weights, &mut rng)?
    } else {
        (Vec::new(), SubsetSource::None)
    };
    let tight = tightened_estimator(
        &freqs.pi,
        tau,
        &subset,
        x,
        n,
        stat.pool.clone(),
        &stat_config,
        &mut rng,
        trace.as_mut().map(|f| &mut **f as &mut dyn FnMut(&TraceRecord)),
    )?;
    let statistic_seconds = start.elapsed().as_secs_f64();
    let mut statistic_counters = stat.counters.clone();
    statistic_counters.absorb(&tight.counters);

    let rep_config = ColgenConfig {
        time_limit: config.replication_time_limit,
        ..config.mode.colgen(&base)
    };
    let mut pool = tight.pool.clone();
    let mut records: Vec<ReplicationRecord> = Vec::with_capacity(config.bootstrap);
    let mut bootstrap_counters = WorkCounters::default();
    let want_trace = trace.is_some();
    let boot_start = Instant::now();
    let mut next = 0;
    while next < config.bootstrap {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            log::warn!("time limit reached after {next} of {} replications", config.bootstrap);
            break;
        }
        let batch: Vec<usize> = (next..(next + config.batch_size).min(config.bootstrap)).collect();
        next += batch.len();
        let snapshot = &pool;
        let results: Vec<_> = batch
            .par_iter()
            .map(|&m| {
                replicate(
                    m,
                    x,
                    freqs,
                    &tight,
                    reference,
                    snapshot.clone(),
                    &rep_config,
                    config,
                    want_trace,
                )
            })
            .collect();
        let mut merged = pool.clone();
        for (record, rep_pool, events) in results {
            if let Some(p) = rep_pool {
                merged.merge(&p);
            }
            if let Some(sink) = trace.as_mut() {
                for e in events {
                    sink(&e);
                }
            }
            bootstrap_counters.absorb(&record.counters);
            records.push(record);
        }
        if let Some(k) = config.purge_after {
            merged.purge(k);
        }
        pool = merged;
    }

    let completed = records.iter().filter(|r| r.outcome.completed()).count();
    let exceedances = records
        .iter()
        .filter(|r| r.outcome.completed() && r.outcome.at_least(reference))
        .count();
    let p_value = (completed > 0).then(|| exceedances as f64 / completed as f64);
    Ok(TestReport {
        version: REPORT_VERSION,
        data_digest: None,
        config: config.clone(),
        periods: x.periods(),
        patch_counts: x.patch_counts(),
        dropped_patches: 0,
        observations: n_obs,
        tau,
        subset_size: subset.len(),
        subset_source: source,
        negative_shift: tight.negative_shift,
        j_stat,
        p_value,
        requested: config.bootstrap,
        completed,
        exceedances,
        partial: completed < config.bootstrap,
        statistic_counters,
        bootstrap_counters,
        final_pool_size: pool.len(),
        replications: records,
        timing: Timing {
            statistic_seconds,
            bootstrap_seconds: boot_start.elapsed().as_secs_f64(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// RNG for replication `m`; stream 0 belongs to the statistic phase.
pub fn replication_rng(seed: u64, m: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64 + 1);
    rng
}

#[allow(clippy::too_many_arguments)]
fn replicate(
    m: usize,
    x: &Inducement,
    freqs: &Frequencies,
    tight: &Tightened,
    reference: f64,
    pool: ColumnPool,
    rep_config: &ColgenConfig,
    config: &TestConfig,
    want_trace: bool,
) -> (ReplicationRecord, Option<ColumnPool>, Vec<TraceRecord>) {
    let mut rng = replication_rng(config.seed, m);
    let pi_star = bootstrap_frequencies(freqs, x, &mut rng);
    let centred = recenter(&pi_star, &freqs.pi, &tight.eta);
    let target: Vec<f64> = centred.iter().zip(&tight.shift).map(|(a, b)| a - b).collect();
    let mut events = Vec::new();
    let mut sink = |e: &TraceEvent| {
        events.push(TraceRecord {
            phase: Phase::Replication,
            replication: Some(m),
            event: e.clone(),
        })
    };
    let trace = want_trace.then_some(&mut sink as &mut dyn FnMut(&TraceEvent));
    let n = freqs.total_observations() as f64;
    let result = bounded_project(&target, x, n, reference, pool, rep_config, &mut rng, trace);
    let (outcome, counters, pool) = match result {
        Ok(b) => (
            ReplicationOutcome::from_bounded(b.outcome, config.zero_tol),
            b.counters,
            Some(b.pool),
        ),
        Err(ColgenError::TimedOut { upper_bound, iterations }) => {
            log::warn!("replication {m} timed out after {iterations} iterations");
            (
                if upper_bound < reference {
                    ReplicationOutcome::BelowRef { upper_bound }
                } else {
                    ReplicationOutcome::TimedOut { upper_bound }
                },
                WorkCounters {
                    iterations,
                    ..Default::default()
                },
                None,
            )
        }
        Err(e) => {
            log::error!("replication {m} failed: {e}");
            (ReplicationOutcome::Failed, WorkCounters::default(), None)
        }
    };
    (
        ReplicationRecord {
            index: m,
            outcome,
            counters,
        },
        pool,
        events,
    )
}
