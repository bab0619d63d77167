//! Multi-objective MDP tables, vector arithmetic and simulation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::{Error, Result, SimRng};

/// Tolerance for probability vectors summing to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;
/// Tolerance for weight vectors summing to one.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;
/// Smallest entry a weight vector may carry before it is rejected.
pub const NEGATIVE_WEIGHT_TOLERANCE: f64 = -1e-12;

/// A preference over objectives: a point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidWeight("need at least two objectives"));
        }
        if entries.iter().any(|w| !w.is_finite() || *w < NEGATIVE_WEIGHT_TOLERANCE) {
            return Err(Error::InvalidWeight("entries must be finite and non-negative"));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidWeight("entries must sum to one"));
        }
        // tiny negatives within tolerance are clamped so downstream code sees w >= 0
        let entries = entries.into_iter().map(|w| w.max(0.0)).collect();
        Ok(Self(entries))
    }

    /// Projects a non-negative vector with positive mass onto the simplex by
    /// normalization.
    pub fn normalized(entries: Vec<f64>) -> Result<Self> {
        let clamped: Vec<f64> = entries.into_iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidWeight("vector has no positive mass"));
        }
        Self::new(clamped.into_iter().map(|w| w / sum).collect())
    }

    /// The weight that puts all mass on `objective`.
    pub fn extremum(dim: usize, objective: usize) -> Result<Self> {
        if objective >= dim {
            return Err(Error::IndexOutOfRange { what: "objective", index: objective, bound: dim });
        }
        let mut entries = vec![0.0; dim];
        entries[objective] = 1.0;
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Deref for WeightVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Expected discounted return, one entry per objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite value entry in {entries:?}")));
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|v| v * v).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Deref for ValueVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<ValueVector> for Vec<f64> {
    fn from(v: ValueVector) -> Self {
        v.0
    }
}

/// Dot product of two equal-length slices, accumulated left to right.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Linear utility `v · w`.
pub fn scalarize(v: &[f64], w: &WeightVector) -> Result<f64> {
    if v.len() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: v.len() });
    }
    Ok(dot(v, w))
}

/// One possible result of taking an action.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    pub next_state: usize,
    pub reward: ValueVector,
    pub terminal: bool,
}

impl Outcome {
    pub fn new(probability: f64, next_state: usize, reward: Vec<f64>, terminal: bool) -> Self {
        Self { probability, next_state, reward: ValueVector(reward), terminal }
    }
}

/// A sampled step of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: ValueVector,
    pub next_state: usize,
    pub terminal: bool,
}

/// A finite MOMDP with an explicit model.
///
/// States and actions are dense indices; `outcomes` is indexed by
/// `state * action_count + action`.
#[derive(Debug, Clone)]
pub struct Momdp {
    state_count: usize,
    action_count: usize,
    objective_count: usize,
    gamma: f64,
    initial: Vec<f64>,
    outcomes: Vec<Vec<Outcome>>,
    horizon: Option<usize>,
}

impl Momdp {
    pub fn new(
        state_count: usize,
        action_count: usize,
        objective_count: usize,
        gamma: f64,
        initial: Vec<f64>,
        outcomes: Vec<Vec<Outcome>>,
    ) -> Result<Self> {
        let invalid = |why: alloc::string::String| Err(Error::InvalidModel(why));
        if state_count == 0 {
            return invalid("state set is empty".into());
        }
        if action_count == 0 {
            return invalid("action set is empty".into());
        }
        if objective_count == 0 {
            return invalid("objective count must be positive".into());
        }
        if !(0.0..1.0).contains(&gamma) {
            return invalid(format!("discount {gamma} outside [0, 1)"));
        }
        if initial.len() != state_count {
            return invalid(format!("initial distribution has {} entries, expected {state_count}", initial.len()));
        }
        check_distribution(initial.iter().copied()).map_err(|why| Error::InvalidModel(format!("initial distribution {why}")))?;
        if outcomes.len() != state_count * action_count {
            return invalid(format!(
                "transition table has {} rows, expected {}",
                outcomes.len(),
                state_count * action_count
            ));
        }
        for (row, outs) in outcomes.iter().enumerate() {
            let (s, a) = (row / action_count, row % action_count);
            if outs.is_empty() {
                return invalid(format!("no outcomes for state {s}, action {a}"));
            }
            check_distribution(outs.iter().map(|o| o.probability))
                .map_err(|why| Error::InvalidModel(format!("transition row (s={s}, a={a}) {why}")))?;
            for o in outs {
                if o.next_state >= state_count {
                    return invalid(format!("next state {} out of range at (s={s}, a={a})", o.next_state));
                }
                if o.reward.dim() != objective_count {
                    return invalid(format!(
                        "reward of length {} at (s={s}, a={a}), expected {objective_count}",
                        o.reward.dim()
                    ));
                }
                if o.reward.iter().any(|r| !r.is_finite()) {
                    return invalid(format!("non-finite reward at (s={s}, a={a})"));
                }
            }
        }
        Ok(Self { state_count, action_count, objective_count, gamma, initial, outcomes, horizon: None })
    }

    /// Optional episode step cap used by simulation; planning ignores it.
    pub fn with_horizon(mut self, horizon: Option<usize>) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }
    pub fn action_count(&self) -> usize {
        self.action_count
    }
    pub fn objective_count(&self) -> usize {
        self.objective_count
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }
    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    pub fn outcomes(&self, state: usize, action: usize) -> &[Outcome] {
        &self.outcomes[state * self.action_count + action]
    }

    pub fn is_deterministic(&self) -> bool {
        self.outcomes.iter().all(|o| o.len() == 1)
    }

    /// `max_{s,a} ||r(s,a)||` over every declared outcome (Euclidean norm).
    pub fn max_reward_norm(&self) -> f64 {
        self.outcomes.iter().flatten().map(|o| o.reward.norm()).fold(0.0, f64::max)
    }

    fn check_indices(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.state_count {
            return Err(Error::IndexOutOfRange { what: "state", index: state, bound: self.state_count });
        }
        if action >= self.action_count {
            return Err(Error::IndexOutOfRange { what: "action", index: action, bound: self.action_count });
        }
        Ok(())
    }

    /// Samples one transition from `p(·|s,a)`.
    pub fn step(&self, state: usize, action: usize, rng: &mut SimRng) -> Result<Transition> {
        self.check_indices(state, action)?;
        let outs = self.outcomes(state, action);
        let pick = if outs.len() == 1 {
            0
        } else {
            let probs: Vec<f64> = outs.iter().map(|o| o.probability).collect();
            rng.categorical(&probs)
        };
        let o = &outs[pick];
        Ok(Transition {
            state,
            action,
            reward: o.reward.clone(),
            next_state: o.next_state,
            terminal: o.terminal,
        })
    }

    /// Draws a start state from the initial distribution.
    pub fn reset(&self, rng: &mut SimRng) -> usize {
        match self.initial.iter().position(|&p| p == 1.0) {
            Some(s) => s,
            None => rng.categorical(&self.initial),
        }
    }
}

fn check_distribution(probs: impl Iterator<Item = f64>) -> core::result::Result<(), alloc::string::String> {
    let mut sum = 0.0;
    for p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("has invalid probability {p}"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

/// Dense multi-objective action-value table `S × A → R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoQTable {
    states: usize,
    actions: usize,
    objectives: usize,
    data: Vec<f64>,
}

impl MoQTable {
    pub fn zeros(states: usize, actions: usize, objectives: usize) -> Self {
        Self { states, actions, objectives, data: vec![0.0; states * actions * objectives] }
    }

    pub fn for_env(env: &Momdp) -> Self {
        Self::zeros(env.state_count(), env.action_count(), env.objective_count())
    }

    pub fn states(&self) -> usize {
        self.states
    }
    pub fn actions(&self) -> usize {
        self.actions
    }
    pub fn objectives(&self) -> usize {
        self.objectives
    }

    #[inline]
    fn offset(&self, state: usize, action: usize) -> usize {
        (state * self.actions + action) * self.objectives
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> &[f64] {
        let o = self.offset(state, action);
        &self.data[o..o + self.objectives]
    }

    #[inline]
    pub fn get_mut(&mut self, state: usize, action: usize) -> &mut [f64] {
        let o = self.offset(state, action);
        &mut self.data[o..o + self.objectives]
    }

    pub fn set(&mut self, state: usize, action: usize, value: &[f64]) {
        self.get_mut(state, action).copy_from_slice(value);
    }

    /// `q(s,a) · w`.
    #[inline]
    pub fn scalarized(&self, state: usize, action: usize, w: &[f64]) -> f64 {
        dot(self.get(state, action), w)
    }

    /// Greedy action for `w`; ties go to the lowest action index.
    pub fn greedy_action(&self, state: usize, w: &[f64]) -> usize {
        let mut best = 0;
        let mut best_value = self.scalarized(state, 0, w);
        for a in 1..self.actions {
            let v = self.scalarized(state, a, w);
            if v > best_value {
                best = a;
                best_value = v;
            }
        }
        best
    }

    pub fn greedy_policy(&self, w: &[f64]) -> Vec<usize> {
        (0..self.states).map(|s| self.greedy_action(s, w)).collect()
    }

    /// Max-norm distance between the scalarized tables.
    pub fn max_scalarized_diff(&self, other: &Self, w: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.states {
            for a in 0..self.actions {
                worst = worst.max((self.scalarized(s, a, w) - other.scalarized(s, a, w)).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
