//! Choice types: one patch per period, rational when the revealed strict
//! price preferences they induce are acyclic.

use std::collections::HashSet;

use num_bigint::BigUint;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inducement::{bits, Inducement};

#[derive(Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("type has {found} picks, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("pick {pick} for period {period} exceeds its {patches} patches")]
    BadPick {
        period: usize,
        pick: usize,
        patches: usize,
    },
    #[error("{product} candidate types exceed the enumeration limit {limit}")]
    TooLarge { product: BigUint, limit: u64 },
    #[error("found only {found} of {wanted} distinct rational types within {draws} draws")]
    Exhausted {
        wanted: usize,
        found: usize,
        draws: usize,
    },
}

/// One patch index per period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChoiceType {
    picks: Vec<usize>,
}

impl ChoiceType {
    pub fn new(picks: Vec<usize>) -> Self {
        ChoiceType { picks }
    }

    pub fn picks(&self) -> &[usize] {
        &self.picks
    }

    pub fn validate(&self, x: &Inducement) -> Result<(), TypeError> {
        if self.picks.len() != x.periods() {
            return Err(TypeError::WrongLength {
                expected: x.periods(),
                found: self.picks.len(),
            });
        }
        for (t, &pick) in self.picks.iter().enumerate() {
            if pick >= x.patch_count(t) {
                return Err(TypeError::BadPick {
                    period: t,
                    pick,
                    patches: x.patch_count(t),
                });
            }
        }
        Ok(())
    }

    /// Flat coordinates `(t, picks[t])` where `a_r` is 1.
    pub fn coordinates<'a>(&'a self, x: &'a Inducement) -> impl Iterator<Item = usize> + 'a {
        self.picks.iter().enumerate().map(|(t, &i)| x.index(t, i))
    }

    /// The 0/1 generator vector `a_r`.
    pub fn to_vector(&self, x: &Inducement) -> Vec<f64> {
        let mut a = vec![0.0; x.dim()];
        for k in self.coordinates(x) {
            a[k] = 1.0;
        }
        a
    }

    /// `s · a_r`.
    pub fn value(&self, x: &Inducement, s: &[f64]) -> f64 {
        self.coordinates(x).map(|k| s[k]).sum()
    }
}

/// Direct strict price-preference relations; `prefers[j]` has bit `t` set
/// when `p_j ≻ p_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceDigraph {
    prefers: Vec<u64>,
}

impl PreferenceDigraph {
    pub fn periods(&self) -> usize {
        self.prefers.len()
    }

    /// `ρ[j][t]`.
    pub fn has_edge(&self, j: usize, t: usize) -> bool {
        self.prefers[j] >> t & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.prefers.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// Depth-first cycle detection.
    pub fn is_acyclic(&self) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.prefers.len();
        let mut mark = vec![Mark::New; n];
        let mut stack: Vec<(usize, u64)> = Vec::with_capacity(n);
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            mark[root] = Mark::Active;
            stack.push((root, self.prefers[root]));
            while let Some((node, pending)) = stack.last_mut() {
                if *pending == 0 {
                    mark[*node] = Mark::Done;
                    stack.pop();
                    continue;
                }
                let next = pending.trailing_zeros() as usize;
                *pending &= *pending - 1;
                match mark[next] {
                    Mark::Active => return false,
                    Mark::Done => {}
                    Mark::New => {
                        mark[next] = Mark::Active;
                        stack.push((next, self.prefers[next]));
                    }
                }
            }
        }
        true
    }

    /// Strongly connected components with more than one period, each sorted,
    /// ordered by smallest member.
    pub fn cyclic_components(&self) -> Vec<Vec<usize>> {
        let n = self.prefers.len();
        let mut g = DiGraph::<(), ()>::with_capacity(n, self.edge_count());
        let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        for (j, &m) in self.prefers.iter().enumerate() {
            for t in bits(m) {
                g.add_edge(nodes[j], nodes[t], ());
            }
        }
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        comps.sort();
        comps
    }
}

/// `ρ[j][t] = X[t][picks[t]][j]`, direct relations only.
pub fn induced_relations(ty: &ChoiceType, x: &Inducement) -> PreferenceDigraph {
    let mut prefers = vec![0u64; x.periods()];
    for (t, &i) in ty.picks().iter().enumerate() {
        for j in bits(x.below(t, i)) {
            prefers[j] |= 1u64 << t;
        }
    }
    PreferenceDigraph { prefers }
}

pub fn is_rational(ty: &ChoiceType, x: &Inducement) -> bool {
    induced_relations(ty, x).is_acyclic()
}

/// Transitive closure of the strict preference digraph, grown one period
/// pick at a time. `reach[u]` holds every `v` with `p_u ≻* p_v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Closure {
    reach: Vec<u64>,
}

impl Closure {
    pub(crate) fn new(periods: usize) -> Self {
        Closure {
            reach: vec![0; periods],
        }
    }

    /// Would adding edges `j → t` for `j ∈ below` close a cycle?
    pub(crate) fn creates_cycle(&self, t: usize, below: u64) -> bool {
        self.reach[t] & below != 0
    }

    /// Add edges `j → t` for every `j ∈ below`; caller checks acyclicity.
    pub(crate) fn add(&mut self, t: usize, below: u64) {
        if below == 0 {
            return;
        }
        let gained = self.reach[t] | (1u64 << t);
        for u in 0..self.reach.len() {
            if below >> u & 1 == 1 || self.reach[u] & below != 0 {
                self.reach[u] |= gained;
            }
        }
    }
}

fn type_product(x: &Inducement) -> BigUint {
    x.patch_counts()
        .iter()
        .fold(BigUint::from(1u32), |acc, &n| acc * BigUint::from(n))
}

/// All rational types in lexicographic pick order.
pub fn enumerate_rational_types(x: &Inducement, limit: u64) -> Result<Vec<ChoiceType>, TypeError> {
    let product = type_product(x);
    if product > BigUint::from(limit) {
        return Err(TypeError::TooLarge { product, limit });
    }
    let mut out = Vec::new();
    let mut picks = Vec::with_capacity(x.periods());
    enumerate_from(x, &Closure::new(x.periods()), &mut picks, &mut out);
    Ok(out)
}

// A cycle among edges contributed by fixed periods only involves fixed
// periods, so prefixes that already cycle can be pruned.
fn enumerate_from(
    x: &Inducement,
    closure: &Closure,
    picks: &mut Vec<usize>,
    out: &mut Vec<ChoiceType>,
) {
    let t = picks.len();
    if t == x.periods() {
        out.push(ChoiceType::new(picks.clone()));
        return;
    }
    for (i, &below) in x.period_masks(t).iter().enumerate() {
        if closure.creates_cycle(t, below) {
            continue;
        }
        let mut next = closure.clone();
        next.add(t, below);
        picks.push(i);
        enumerate_from(x, &next, picks, out);
        picks.pop();
    }
}

pub fn random_type<R: Rng + ?Sized>(x: &Inducement, rng: &mut R) -> ChoiceType {
    ChoiceType::new(
        (0..x.periods())
            .map(|t| rng.gen_range(0..x.patch_count(t)))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCountEstimate {
    /// `Π_t I_t`, exact.
    pub total: BigUint,
    /// Fraction of uniformly drawn types that were rational.
    pub rational_ratio: f64,
    pub samples: usize,
}

impl TypeCountEstimate {
    /// Estimated number of rational types.
    pub fn rational_estimate(&self) -> f64 {
        let total: f64 = self.total.to_string().parse().unwrap_or(f64::INFINITY);
        total * self.rational_ratio
    }
}

pub fn estimate_type_counts<R: Rng + ?Sized>(
    x: &Inducement,
    samples: usize,
    rng: &mut R,
) -> TypeCountEstimate {
    let samples = samples.max(1);
    let rational = (0..samples)
        .filter(|_| is_rational(&random_type(x, rng), x))
        .count();
    TypeCountEstimate {
        total: type_product(x),
        rational_ratio: rational as f64 / samples as f64,
        samples,
    }
}

/// Score weights used when repairing an irrational draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairWeights {
    /// Charged per relation the candidate patch adds.
    pub add: f64,
    /// Charged per relation the candidate patch removes.
    pub remove: f64,
}

impl RepairWeights {
    pub const PSEUDOCODE: RepairWeights = RepairWeights {
        add: 1.0,
        remove: 5.0,
    };
    /// Favour removing relations over adding them.
    pub const PREFER_REMOVAL: RepairWeights = RepairWeights {
        add: 5.0,
        remove: 1.0,
    };
}

impl Default for RepairWeights {
    fn default() -> Self {
        Self::PSEUDOCODE
    }
}

/// Penalty for a candidate patch that removes no relation inside the cycle.
pub const NO_REMOVAL_PENALTY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub max_repair_rounds: usize,
    /// Fresh random draws allowed in total; `None` picks `1000 + 100·count`.
    pub max_draws: Option<usize>,
    pub weights: RepairWeights,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            max_repair_rounds: 50,
            max_draws: None,
            weights: RepairWeights::default(),
        }
    }
}

/// Patch of period `t` chosen to replace the current pick inside cyclic
/// component `component`. Lowest index wins ties.
pub fn repair_choice(
    x: &Inducement,
    t: usize,
    current: usize,
    component: u64,
    weights: RepairWeights,
) -> usize {
    let z = x.below(t, current);
    let mut best = (f64::INFINITY, current);
    for (i, &cand) in x.period_masks(t).iter().enumerate() {
        let mut score = 0.0;
        // keeps every relation z induces inside the component
        if cand & component & z == z & component {
            score = NO_REMOVAL_PENALTY;
        }
        score += weights.add * (cand & !z).count_ones() as f64;
        score += weights.remove * (z & !cand).count_ones() as f64;
        if score < best.0 {
            best = (score, i);
        }
    }
    best.1
}

/// Draw `count` distinct rational types by random draws followed by local
/// repair of preference cycles.
pub fn sample_rational_types<R: Rng + ?Sized>(
    x: &Inducement,
    count: usize,
    rng: &mut R,
    config: &RepairConfig,
) -> Result<Vec<ChoiceType>, TypeError> {
    let max_draws = config.max_draws.unwrap_or(1000 + 100 * count);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut draws = 0;
    while out.len() < count {
        if draws >= max_draws {
            return Err(TypeError::Exhausted {
                wanted: count,
                found: out.len(),
                draws,
            });
        }
        draws += 1;
        let mut ty = random_type(x, rng);
        let mut rounds = 0;
        let rational = loop {
            let digraph = induced_relations(&ty, x);
            if digraph.is_acyclic() {
                break true;
            }
            if rounds == config.max_repair_rounds {
                break false;
            }
            rounds += 1;
            for comp in digraph.cyclic_components() {
                let t = comp[rng.gen_range(0..comp.len())];
                let mask = comp.iter().fold(0u64, |m, &p| m | (1u64 << p));
                let pick = repair_choice(x, t, ty.picks[t], mask, config.weights);
                ty.picks[t] = pick;
            }
        };
        if rational && seen.insert(ty.clone()) {
            out.push(ty);
        }
    }
    Ok(out)
}
