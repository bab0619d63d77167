//! GPI linear support: corner-weight search prioritized by the improvement
//! GPI guarantees.

use alloc::vec::Vec;

use crate::geometry::{corner_weights, dominance_mask, max_scalarized, GeometryConfig};
use crate::gpi::{gpi_action, PolicyLibrary};
use crate::momdp::{dot, MoQTable, Momdp, ValueVector, WeightVector};
use crate::oracle::{evaluate_policy, initial_value, scalarized_value_iteration, Evaluator, MetricTrace, OracleConfig};
use crate::{Error, Result, SimRng};

/// How policy values are estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueEstimator {
    /// Dynamic-programming evaluation on the true model.
    Exact(OracleConfig),
    /// Mean discounted return of seeded Monte-Carlo rollouts.
    Rollouts { episodes: usize, horizon: usize, seed: u64 },
}

impl ValueEstimator {
    pub fn validate(&self) -> Result<()> {
        match self {
            ValueEstimator::Exact(cfg) => cfg.validate(),
            ValueEstimator::Rollouts { episodes, horizon, .. } => {
                if *episodes == 0 || *horizon == 0 {
                    return Err(Error::InvalidConfig("rollout count and horizon must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// Vector value of a deterministic stationary policy from the initial
/// distribution.
pub fn evaluate_policy_value(
    env: &Momdp,
    policy: &dyn Fn(usize) -> usize,
    estimator: &ValueEstimator,
) -> Result<ValueVector> {
    match *estimator {
        ValueEstimator::Exact(cfg) => Ok(initial_value(env, &evaluate_policy(env, policy, &cfg)?)),
        ValueEstimator::Rollouts { episodes, horizon, seed } => {
            let m = env.objective_count();
            let mut rng = SimRng::seed(seed);
            let mut total = alloc::vec![0.0; m];
            for _ in 0..episodes {
                let mut state = env.reset(&mut rng);
                let mut discount = 1.0;
                for _ in 0..horizon {
                    let t = env.step(state, policy(state), &mut rng)?;
                    for (acc, r) in total.iter_mut().zip(t.reward.iter()) {
                        *acc += discount * r;
                    }
                    if t.terminal {
                        break;
                    }
                    discount *= env.gamma();
                    state = t.next_state;
                }
            }
            ValueVector::new(total.into_iter().map(|v| v / episodes as f64).collect())
        }
    }
}

/// Scalarized value of the GPI policy for `w` from the initial distribution.
pub fn evaluate_gpi_value(env: &Momdp, lib: &PolicyLibrary, w: &WeightVector, estimator: &ValueEstimator) -> Result<f64> {
    if lib.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let policy = |s: usize| gpi_action(lib, s, w).expect("library is non-empty");
    Ok(dot(&evaluate_policy_value(env, &policy, estimator)?, w))
}

/// Result of training (or solving) a policy for one weight.
#[derive(Debug, Clone)]
pub struct NewPolicy {
    pub q: MoQTable,
    pub value: ValueVector,
    /// Whether the solver reached its stopping criterion.
    pub done: bool,
}

/// The per-weight policy search used by the outer loop.
pub trait PolicySolver {
    fn solve(&mut self, env: &Momdp, lib: &PolicyLibrary, w: &WeightVector) -> Result<NewPolicy>;
}

/// Optimal policies from scalarized value iteration.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    cfg: OracleConfig,
}

impl ExactSolver {
    pub fn new(cfg: OracleConfig) -> Self {
        Self { cfg }
    }
}

impl PolicySolver for ExactSolver {
    fn solve(&mut self, env: &Momdp, _lib: &PolicyLibrary, w: &WeightVector) -> Result<NewPolicy> {
        let sol = scalarized_value_iteration(env, w, &self.cfg)?;
        Ok(NewPolicy { q: sol.q, value: sol.value, done: true })
    }
}

/// Optimal policies whose reported value vectors are lowered by a random
/// amount in `[0, ε]` per objective, so every reported vector is at most
/// `ε` worse than optimal for the weight it was solved for.
#[derive(Debug, Clone)]
pub struct PerturbedSolver {
    cfg: OracleConfig,
    epsilon: f64,
    rng: SimRng,
}

impl PerturbedSolver {
    pub fn new(cfg: OracleConfig, epsilon: f64, rng: SimRng) -> Self {
        Self { cfg, epsilon, rng }
    }
}

impl PolicySolver for PerturbedSolver {
    fn solve(&mut self, env: &Momdp, _lib: &PolicyLibrary, w: &WeightVector) -> Result<NewPolicy> {
        let sol = scalarized_value_iteration(env, w, &self.cfg)?;
        let mut value = sol.value.into_inner();
        for v in value.iter_mut() {
            *v -= self.epsilon * self.rng.unit();
        }
        Ok(NewPolicy { q: sol.q, value: ValueVector::new(value)?, done: true })
    }
}

/// State of the outer corner-weight loop.
#[derive(Debug, Clone, Default)]
pub struct GpiLsState {
    pub library: PolicyLibrary,
    /// Weights whose training finished; never selected again.
    pub finished: Vec<WeightVector>,
    pub iteration: usize,
    pub trace: MetricTrace,
}

impl GpiLsState {
    pub fn is_finished(&self, w: &WeightVector, tol: f64) -> bool {
        self.finished.iter().any(|f| f.max_abs_diff(w) <= tol)
    }

    pub(crate) fn mark_finished(&mut self, w: &WeightVector, tol: f64) {
        if !self.is_finished(w, tol) {
            self.finished.push(w.clone());
        }
    }

    /// Drops dominated policies (and duplicates of earlier ones).
    pub(crate) fn prune(&mut self, geometry: &GeometryConfig) -> Result<()> {
        let mask = dominance_mask(&self.library.value_set(), geometry)?;
        self.library.retain(&mask);
        Ok(())
    }
}

/// Unfinished corner weights ranked by `v^GPI_w - max_π v^π_w`, best first.
/// Ties keep lexicographic order. At most `k` weights are returned.
pub fn select_weights(
    state: &GpiLsState,
    env: &Momdp,
    estimator: &ValueEstimator,
    geometry: &GeometryConfig,
    k: usize,
) -> Result<Vec<WeightVector>> {
    if state.library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let values = state.library.value_set();
    let corners = corner_weights(&values, geometry)?;
    let mut ranked: Vec<(f64, WeightVector)> = Vec::new();
    for w in corners.weights {
        if state.is_finished(&w, geometry.dedup_tolerance) {
            continue;
        }
        let gain = evaluate_gpi_value(env, &state.library, &w, estimator)? - max_scalarized(&values, &w)?.0;
        ranked.push((gain, w));
    }
    // stable: equal gains stay in lexicographic order
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ranked.into_iter().take(k).map(|(_, w)| w).collect())
}

/// The single best corner weight, or `None` once every corner weight has
/// been finished (the library then covers the CCS, or an ε-CCS).
pub fn select_weight(
    state: &GpiLsState,
    env: &Momdp,
    estimator: &ValueEstimator,
    geometry: &GeometryConfig,
) -> Result<Option<WeightVector>> {
    Ok(select_weights(state, env, estimator, geometry, 1)?.into_iter().next())
}

/// GPI linear support with a pluggable per-weight solver.
///
/// Starts from the first extremum weight, then repeatedly trains on the
/// corner weight with the largest GPI improvement until no unfinished
/// corner weight remains. With an evaluator, records one trace row per
/// iteration (`env_steps` counts solver calls).
pub fn gpi_ls(
    env: &Momdp,
    solver: &mut dyn PolicySolver,
    estimator: &ValueEstimator,
    geometry: &GeometryConfig,
    evaluator: Option<&Evaluator>,
    max_iterations: usize,
) -> Result<GpiLsState> {
    geometry.validate()?;
    let mut state = GpiLsState::default();
    let first = WeightVector::extremum(env.objective_count(), 0)?;
    let np = solver.solve(env, &state.library, &first)?;
    state.library.push(np.q, first, np.value);
    let record = |state: &mut GpiLsState| -> Result<()> {
        if let Some(ev) = evaluator {
            let row = ev.record(state.iteration, state.iteration as u64, &state.library.value_set())?;
            state.trace.push(row)?;
        }
        Ok(())
    };
    record(&mut state)?;
    loop {
        let Some(w) = select_weight(&state, env, estimator, geometry)? else {
            return Ok(state);
        };
        if state.iteration >= max_iterations {
            return Err(Error::IterationCap { iterations: max_iterations });
        }
        let np = solver.solve(env, &state.library, &w)?;
        if np.done {
            state.mark_finished(&w, geometry.dedup_tolerance);
        }
        state.library.push(np.q, w, np.value);
        state.prune(geometry)?;
        state.iteration += 1;
        record(&mut state)?;
    }
}
