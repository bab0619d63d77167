//! Tabular learners: per-weight multi-objective TD learning, the GPI linear
//! support outer loop, and tabular GPI-prioritized Dyna.

mod gpi_ls;
mod gpi_pd;
mod model;

pub use gpi_ls::{
    evaluate_gpi_value, evaluate_policy_value, gpi_ls, select_weight, select_weights, ExactSolver, GpiLsState,
    NewPolicy, PerturbedSolver, PolicySolver, ValueEstimator,
};
pub use gpi_pd::gpi_pd_run;
pub use model::{ModelRecord, TabularModel};

use crate::gpi::{gpi_action, PolicyLibrary};
use crate::momdp::{dot, MoQTable, Transition, WeightVector};
use crate::{Error, Result, SimRng};

/// Linear ε schedule from `start` to `end` over `anneal_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.0, anneal_steps: 50_000 }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.anneal_steps == 0 {
            return self.end;
        }
        let frac = (step as f64 / self.anneal_steps as f64).min(1.0);
        self.start + (self.end - self.start) * frac
    }
}

/// How Dyna planning picks buffered experience.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynaSampling {
    /// Proportional to GPI priorities.
    Gpi,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
    /// Environment steps between weight refreshes.
    pub steps_per_iteration: usize,
    /// Dyna planning updates per real step.
    pub dyna_steps: usize,
    pub max_iterations: usize,
    /// Utility-loss tolerance used when declaring an ε-CCS.
    pub epsilon_ccs: f64,
    /// New weights added at each refresh.
    pub top_k: usize,
    /// Max-norm change below which a policy's training counts as finished.
    pub done_tolerance: f64,
    pub sampling: DynaSampling,
    pub estimator: ValueEstimator,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.3,
            epsilon: EpsilonSchedule::default(),
            steps_per_iteration: 1000,
            dyna_steps: 5,
            max_iterations: 100,
            epsilon_ccs: 0.0,
            top_k: 1,
            done_tolerance: 1e-6,
            sampling: DynaSampling::Gpi,
            estimator: ValueEstimator::Exact(crate::oracle::OracleConfig::default()),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidConfig("learning rate must lie in (0, 1]"));
        }
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        if !eps_ok(self.epsilon.start) || !eps_ok(self.epsilon.end) {
            return Err(Error::InvalidConfig("epsilon must lie in [0, 1]"));
        }
        if self.steps_per_iteration == 0 {
            return Err(Error::InvalidConfig("steps per iteration must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be positive"));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top-k must be positive"));
        }
        if !(self.epsilon_ccs >= 0.0) || !(self.done_tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be non-negative"));
        }
        self.estimator.validate()
    }
}

/// One multi-objective TD step on `q(s, a)` towards `R + γ q(s', a')`,
/// without bootstrap past a terminal transition.
pub fn td_update(q: &mut MoQTable, t: &Transition, next_action: usize, learning_rate: f64, gamma: f64) {
    for k in 0..q.objectives() {
        // component k of the target only reads component k, so self-loops are safe
        let boot = if t.terminal { 0.0 } else { q.get(t.next_state, next_action)[k] };
        let cell = &mut q.get_mut(t.state, t.action)[k];
        *cell += learning_rate * (t.reward[k] + gamma * boot - *cell);
    }
}

/// Table to start a new policy for `w` from: a copy of the incumbent with
/// the best scalarized value (lowest index on ties), or zeros for an empty
/// library.
pub fn new_policy_init(lib: &PolicyLibrary, w: &WeightVector, states: usize, actions: usize) -> MoQTable {
    if lib.is_empty() {
        return MoQTable::zeros(states, actions, w.dim());
    }
    let mut best = 0;
    let mut best_value = dot(lib.value(0), w);
    for i in 1..lib.len() {
        let v = dot(lib.value(i), w);
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    lib.q(best).clone()
}

/// Uniform random action with probability `epsilon`, GPI action otherwise.
pub fn epsilon_greedy(lib: &PolicyLibrary, state: usize, w: &[f64], epsilon: f64, rng: &mut SimRng) -> Result<usize> {
    let actions = lib.q_tables().first().ok_or(Error::EmptyLibrary)?.actions();
    if rng.unit() < epsilon {
        Ok(rng.index(actions))
    } else {
        gpi_action(lib, state, w)
    }
}
