//! Ground-truth solvers and utility metrics.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{corner_weights, max_scalarized, remove_dominated, GeometryConfig, ValueSet};
use crate::momdp::{dot, MoQTable, Momdp, ValueVector, WeightVector};
use crate::{linalg, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Max-norm change between sweeps at which iteration stops.
    pub vi_tolerance: f64,
    pub vi_max_sweeps: usize,
    /// Size of the equidistant evaluation grid.
    pub weight_grid_size: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { vi_tolerance: 1e-10, vi_max_sweeps: 200_000, weight_grid_size: 101 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.vi_tolerance > 0.0) || self.vi_max_sweeps == 0 || self.weight_grid_size == 0 {
            return Err(Error::InvalidConfig("oracle settings must be positive"));
        }
        Ok(())
    }
}

/// Outcome of solving the scalarized MDP for one weight.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Greedy deterministic policy, one action per state.
    pub policy: Vec<usize>,
    /// Vector value of `policy` under the initial distribution.
    pub value: ValueVector,
    /// `value · w`.
    pub scalar: f64,
    /// Multi-objective q-table of `policy`.
    pub q: MoQTable,
    /// Per-state vector values of `policy`, row-major `S × m`.
    pub state_values: Vec<f64>,
}

/// Optimal scalarized action values `q*_w`, indexed `s * A + a`.
pub fn optimal_scalar_q(env: &Momdp, w: &[f64], cfg: &OracleConfig) -> Result<Vec<f64>> {
    let (s_count, a_count, gamma) = (env.state_count(), env.action_count(), env.gamma());
    let mut v = vec![0.0; s_count];
    let mut q = vec![0.0; s_count * a_count];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.vi_max_sweeps {
        residual = 0.0;
        for s in 0..s_count {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_count {
                let mut acc = 0.0;
                for o in env.outcomes(s, a) {
                    let boot = if o.terminal { 0.0 } else { v[o.next_state] };
                    acc += o.probability * (dot(&o.reward, w) + gamma * boot);
                }
                q[s * a_count + a] = acc;
                best = best.max(acc);
            }
            residual = residual.max((best - v[s]).abs());
        }
        for s in 0..s_count {
            v[s] = q[s * a_count..(s + 1) * a_count].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        if residual < cfg.vi_tolerance {
            return Ok(q);
        }
    }
    Err(Error::NotConverged { what: "value iteration", sweeps: cfg.vi_max_sweeps, residual })
}

/// Largest state count evaluated by a direct linear solve.
const DIRECT_SOLVE_STATES: usize = 512;

/// Vector-valued evaluation of a deterministic stationary policy. Returns
/// per-state values, row-major `S × m`.
///
/// Small models solve `(I - γ P_π) v = r_π` directly; larger ones (or a
/// numerically singular system) iterate the Bellman operator to
/// `vi_tolerance`.
pub fn evaluate_policy(env: &Momdp, policy: &dyn Fn(usize) -> usize, cfg: &OracleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let actions: Vec<usize> = (0..env.state_count()).map(policy).collect();
    if env.state_count() <= DIRECT_SOLVE_STATES {
        if let Some(v) = evaluate_direct(env, &actions) {
            return Ok(v);
        }
    }
    evaluate_iterative(env, &actions, cfg)
}

fn evaluate_direct(env: &Momdp, actions: &[usize]) -> Option<Vec<f64>> {
    let (n, m, gamma) = (env.state_count(), env.objective_count(), env.gamma());
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * m];
    for s in 0..n {
        a[s * n + s] += 1.0;
        for o in env.outcomes(s, actions[s]) {
            if !o.terminal {
                a[s * n + o.next_state] -= gamma * o.probability;
            }
            for k in 0..m {
                b[s * m + k] += o.probability * o.reward[k];
            }
        }
    }
    linalg::solve_many(a, b, m, 1e-12).filter(|v| v.iter().all(|x| x.is_finite()))
}

fn evaluate_iterative(env: &Momdp, actions: &[usize], cfg: &OracleConfig) -> Result<Vec<f64>> {
    let (s_count, m, gamma) = (env.state_count(), env.objective_count(), env.gamma());
    let mut v = vec![0.0; s_count * m];
    let mut next = vec![0.0; s_count * m];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.vi_max_sweeps {
        residual = 0.0;
        for s in 0..s_count {
            let row = &mut next[s * m..(s + 1) * m];
            row.fill(0.0);
            for o in env.outcomes(s, actions[s]) {
                for k in 0..m {
                    let boot = if o.terminal { 0.0 } else { v[o.next_state * m + k] };
                    row[k] += o.probability * (o.reward[k] + gamma * boot);
                }
            }
            for k in 0..m {
                residual = residual.max((row[k] - v[s * m + k]).abs());
            }
        }
        core::mem::swap(&mut v, &mut next);
        if residual < cfg.vi_tolerance {
            return Ok(v);
        }
    }
    Err(Error::NotConverged { what: "policy evaluation", sweeps: cfg.vi_max_sweeps, residual })
}

/// `μ · v(s)` for per-state vector values.
pub fn initial_value(env: &Momdp, state_values: &[f64]) -> ValueVector {
    let m = env.objective_count();
    let mut out = vec![0.0; m];
    for (s, &p) in env.initial_distribution().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for k in 0..m {
            out[k] += p * state_values[s * m + k];
        }
    }
    ValueVector::new(out).unwrap_or_else(|_| ValueVector::zeros(m))
}

/// Multi-objective q-table from per-state values of a policy.
pub fn q_from_state_values(env: &Momdp, state_values: &[f64]) -> MoQTable {
    let m = env.objective_count();
    let gamma = env.gamma();
    let mut q = MoQTable::for_env(env);
    for s in 0..env.state_count() {
        for a in 0..env.action_count() {
            let cell = q.get_mut(s, a);
            for o in env.outcomes(s, a) {
                for k in 0..m {
                    let boot = if o.terminal { 0.0 } else { state_values[o.next_state * m + k] };
                    cell[k] += o.probability * (o.reward[k] + gamma * boot);
                }
            }
        }
    }
    q
}

/// Solves the MDP with reward `r · w` and evaluates the resulting greedy
/// policy on the vector reward.
pub fn scalarized_value_iteration(env: &Momdp, w: &WeightVector, cfg: &OracleConfig) -> Result<OracleSolution> {
    cfg.validate()?;
    if w.dim() != env.objective_count() {
        return Err(Error::DimensionMismatch { expected: env.objective_count(), found: w.dim() });
    }
    let a_count = env.action_count();
    let q_scalar = optimal_scalar_q(env, w, cfg)?;
    let policy: Vec<usize> = (0..env.state_count())
        .map(|s| {
            let row = &q_scalar[s * a_count..(s + 1) * a_count];
            let mut best = 0;
            for a in 1..a_count {
                if row[a] > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect();
    let state_values = evaluate_policy(env, &|s| policy[s], cfg)?;
    let value = initial_value(env, &state_values);
    let scalar = dot(&value, w);
    let q = q_from_state_values(env, &state_values);
    Ok(OracleSolution { policy, value, scalar, q, state_values })
}

/// The CCS of `env` by optimistic linear support: solve every extremum
/// weight with value iteration, then keep solving unchecked corner weights
/// of the current set until none of them reveals a better vector.
pub fn exact_ccs(env: &Momdp, geometry: &GeometryConfig, cfg: &OracleConfig) -> Result<ValueSet> {
    let m = env.objective_count();
    let mut set = ValueSet::new(Vec::new());
    let mut checked: Vec<WeightVector> = Vec::new();
    for i in 0..m {
        let w = WeightVector::extremum(m, i)?;
        let sol = scalarized_value_iteration(env, &w, cfg)?;
        if set.is_empty() || sol.scalar > max_scalarized(&set, &w)?.0 + improvement_tolerance(sol.scalar) {
            set.push(sol.value, set.len());
        }
        checked.push(w);
    }
    let cap = max_oracle_iterations(env);
    for _ in 0..cap {
        let corners = corner_weights(&set, geometry)?;
        let mut improved = false;
        for w in corners.weights {
            if checked.iter().any(|c| c.max_abs_diff(&w) <= geometry.dedup_tolerance) {
                continue;
            }
            let sol = scalarized_value_iteration(env, &w, cfg)?;
            if sol.scalar > max_scalarized(&set, &w)?.0 + improvement_tolerance(sol.scalar) {
                set.push(sol.value, set.len());
                improved = true;
            }
            checked.push(w);
        }
        if !improved {
            return remove_dominated(&set, geometry);
        }
    }
    Err(Error::IterationCap { iterations: cap })
}

fn improvement_tolerance(scale: f64) -> f64 {
    1e-8 * (1.0 + scale.abs())
}

fn max_oracle_iterations(env: &Momdp) -> usize {
    1000 + 50 * env.state_count() * env.action_count()
}

/// Mean over `weights` of `max_{v ∈ V} v · w`.
pub fn expected_utility(set: &ValueSet, weights: &[WeightVector]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("weight list"));
    }
    let mut total = 0.0;
    for w in weights {
        total += max_scalarized(set, w)?.0;
    }
    Ok(total / weights.len() as f64)
}

/// `max_w (max_{ref} v·w - max_V v·w)` over `weights`, clamped at zero.
pub fn maximum_utility_loss(set: &ValueSet, reference: &ValueSet, weights: &[WeightVector]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("weight list"));
    }
    if let (Some(a), Some(b)) = (set.dim(), reference.dim()) {
        if a != b {
            return Err(Error::DimensionMismatch { expected: b, found: a });
        }
    }
    let mut worst: f64 = 0.0;
    for w in weights {
        worst = worst.max(max_scalarized(reference, w)?.0 - max_scalarized(set, w)?.0);
    }
    Ok(worst)
}

/// Weight grid augmented with the corner weights of `set` and of
/// `reference ∪ set`. The utility loss attains its maximum at a corner
/// weight of `set`, so MUL over this list is exact.
pub fn corner_augmented_weights(
    set: &ValueSet,
    reference: &ValueSet,
    grid: &[WeightVector],
    geometry: &GeometryConfig,
) -> Result<Vec<WeightVector>> {
    let mut weights: Vec<WeightVector> = grid.to_vec();
    weights.extend(corner_weights(set, geometry)?.weights);
    weights.extend(corner_weights(&reference.union(set), geometry)?.weights);
    Ok(weights)
}

/// One row of a learning trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub iteration: usize,
    pub env_steps: u64,
    /// Expected utility over the equidistant grid.
    pub eu_grid: f64,
    /// Maximum utility loss over the equidistant grid.
    pub mul_grid: f64,
    /// Maximum utility loss over the grid plus corner weights (exact).
    pub mul_corner: f64,
    pub library_size: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTrace {
    records: Vec<MetricRecord>,
}

impl MetricTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; `env_steps` must strictly increase.
    pub fn push(&mut self, record: MetricRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.env_steps <= last.env_steps {
                return Err(Error::InvalidConfig("trace env_steps must strictly increase"));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Computes trace metrics of a value set against a reference CCS.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub reference: ValueSet,
    pub grid: Vec<WeightVector>,
    pub geometry: GeometryConfig,
}

impl Evaluator {
    pub fn new(reference: ValueSet, grid: Vec<WeightVector>, geometry: GeometryConfig) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::EmptyInput("reference set"));
        }
        if grid.is_empty() {
            return Err(Error::EmptyInput("weight grid"));
        }
        Ok(Self { reference, grid, geometry })
    }

    pub fn record(&self, iteration: usize, env_steps: u64, set: &ValueSet) -> Result<MetricRecord> {
        let augmented = corner_augmented_weights(set, &self.reference, &self.grid, &self.geometry)?;
        Ok(MetricRecord {
            iteration,
            env_steps,
            eu_grid: expected_utility(set, &self.grid)?,
            mul_grid: maximum_utility_loss(set, &self.reference, &self.grid)?,
            mul_corner: maximum_utility_loss(set, &self.reference, &augmented)?,
            library_size: set.len(),
        })
    }
}
