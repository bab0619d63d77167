//! Concrete MOMDPs: Deep Sea Treasure grids and synthetic instances.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::momdp::{Momdp, Outcome};
use crate::{Error, Result, SimRng};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

/// Layout of a Deep Sea Treasure grid. Coordinates are `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DstMap {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, treasure value)`.
    pub treasures: Vec<(usize, usize, f64)>,
    pub blocked: Vec<(usize, usize)>,
    pub start: (usize, usize),
    pub time_penalty: f64,
}

impl DstMap {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(Error::InvalidMap(why));
        if self.rows == 0 || self.cols == 0 {
            return bad("grid must have at least one row and column".into());
        }
        let inside = |(r, c): (usize, usize)| r < self.rows && c < self.cols;
        if !inside(self.start) {
            return bad(format!("start {:?} outside the grid", self.start));
        }
        if !self.time_penalty.is_finite() {
            return bad("time penalty must be finite".into());
        }
        for (i, &(r, c, v)) in self.treasures.iter().enumerate() {
            if !inside((r, c)) {
                return bad(format!("treasure at ({r}, {c}) outside the grid"));
            }
            if !v.is_finite() {
                return bad(format!("treasure at ({r}, {c}) has non-finite value"));
            }
            if self.treasures[..i].iter().any(|&(r2, c2, _)| (r2, c2) == (r, c)) {
                return bad(format!("duplicate treasure at ({r}, {c})"));
            }
            if self.blocked.contains(&(r, c)) {
                return bad(format!("treasure at ({r}, {c}) is on a blocked cell"));
            }
            if (r, c) == self.start {
                return bad(format!("start cell ({r}, {c}) holds a treasure"));
            }
        }
        for &cell in &self.blocked {
            if !inside(cell) {
                return bad(format!("blocked cell {cell:?} outside the grid"));
            }
        }
        if self.blocked.contains(&self.start) {
            return bad("start cell is blocked".into());
        }
        Ok(())
    }

    fn treasure_at(&self, cell: (usize, usize)) -> Option<f64> {
        self.treasures.iter().find(|&&(r, c, _)| (r, c) == cell).map(|&(_, _, v)| v)
    }
}

/// Bijection between in-bounds grid cells and dense state indices
/// (row-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridEncoder {
    pub rows: usize,
    pub cols: usize,
}

impl GridEncoder {
    pub fn encode(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.rows && col < self.cols).then(|| row * self.cols + col)
    }

    pub fn decode(&self, state: usize) -> Option<(usize, usize)> {
        (state < self.rows * self.cols).then(|| (state / self.cols, state % self.cols))
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A built Deep Sea Treasure MOMDP together with its cell encoder.
#[derive(Debug, Clone)]
pub struct DstEnv {
    pub momdp: Momdp,
    pub encoder: GridEncoder,
    pub map: DstMap,
}

/// Builds the two-objective Deep Sea Treasure MOMDP.
///
/// Every cell (blocked ones included) gets a state index. Moving off the
/// grid or into a blocked cell leaves the agent in place. The first reward
/// component is the treasure value of the cell the agent ends up in (zero
/// for blank cells), the second is `time_penalty` on every step. Entering a
/// treasure cell ends the episode.
pub fn build_dst(map: &DstMap, gamma: f64) -> Result<DstEnv> {
    map.validate()?;
    let encoder = GridEncoder { rows: map.rows, cols: map.cols };
    let mut outcomes = Vec::with_capacity(encoder.len() * 4);
    for state in 0..encoder.len() {
        let (r, c) = encoder.decode(state).expect("in range");
        for action in 0..4 {
            let (nr, nc) = match action {
                UP => (r.wrapping_sub(1), c),
                DOWN => (r + 1, c),
                LEFT => (r, c.wrapping_sub(1)),
                _ => (r, c + 1),
            };
            let target = match encoder.encode(nr, nc) {
                Some(_) if !map.blocked.contains(&(nr, nc)) => (nr, nc),
                _ => (r, c),
            };
            let treasure = map.treasure_at(target);
            let next = encoder.encode(target.0, target.1).expect("in range");
            outcomes.push(vec![Outcome::new(
                1.0,
                next,
                vec![treasure.unwrap_or(0.0), map.time_penalty],
                treasure.is_some(),
            )]);
        }
    }
    let mut initial = vec![0.0; encoder.len()];
    initial[encoder.encode(map.start.0, map.start.1).expect("validated")] = 1.0;
    let momdp = Momdp::new(encoder.len(), 4, 2, gamma, initial, outcomes)?;
    Ok(DstEnv { momdp, encoder, map: map.clone() })
}

/// Explicit tables for a small hand-written MOMDP.
#[derive(Debug, Clone)]
pub struct SyntheticMomdpSpec {
    pub name: String,
    pub state_count: usize,
    pub action_count: usize,
    pub objective_count: usize,
    pub gamma: f64,
    pub initial: Vec<f64>,
    /// Indexed by `state * action_count + action`.
    pub outcomes: Vec<Vec<Outcome>>,
}

pub fn build_synthetic(spec: &SyntheticMomdpSpec) -> Result<Momdp> {
    Momdp::new(
        spec.state_count,
        spec.action_count,
        spec.objective_count,
        spec.gamma,
        spec.initial.clone(),
        spec.outcomes.clone(),
    )
    .map_err(|e| match e {
        Error::InvalidModel(why) => Error::InvalidModel(format!("{}: {why}", spec.name)),
        other => other,
    })
}

/// One state, two actions with rewards `(1, 0)` and `(0, 1)`, never
/// terminating. Its two deterministic policies are worth `(1/(1-γ), 0)` and
/// `(0, 1/(1-γ))`.
pub fn two_arm_loop(gamma: f64) -> SyntheticMomdpSpec {
    SyntheticMomdpSpec {
        name: "two-arm-loop".into(),
        state_count: 1,
        action_count: 2,
        objective_count: 2,
        gamma,
        initial: vec![1.0],
        outcomes: vec![
            vec![Outcome::new(1.0, 0, vec![1.0, 0.0], false)],
            vec![Outcome::new(1.0, 0, vec![0.0, 1.0], false)],
        ],
    }
}

/// Random MOMDP with at most two outcomes per `(s, a)`, rewards uniform in
/// `[0, 1)^m`, and terminal outcomes with probability `terminal_prob`.
/// Episodes start in state 0.
pub fn random_momdp(
    rng: &mut SimRng,
    states: usize,
    actions: usize,
    objectives: usize,
    gamma: f64,
    terminal_prob: f64,
) -> Result<Momdp> {
    let mut outcomes = Vec::with_capacity(states * actions);
    for _ in 0..states * actions {
        let branches = if rng.unit() < 0.5 { 1 } else { 2 };
        let split = if branches == 1 { 1.0 } else { 0.2 + 0.6 * rng.unit() };
        let mut row = Vec::with_capacity(branches);
        for b in 0..branches {
            let probability = if b == 0 { split } else { 1.0 - split };
            let next = rng.index(states);
            let reward = (0..objectives).map(|_| rng.unit()).collect();
            let terminal = rng.unit() < terminal_prob;
            row.push(Outcome::new(probability, next, reward, terminal));
        }
        outcomes.push(row);
    }
    let mut initial = vec![0.0; states];
    initial[0] = 1.0;
    Momdp::new(states, actions, objectives, gamma, initial, outcomes)
}
