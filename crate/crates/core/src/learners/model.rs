use alloc::vec;
use alloc::vec::Vec;

use crate::momdp::{Transition, ValueVector};
use crate::{Error, Result, SimRng};

/// An observed outcome of `(s, a)` and how often it was seen.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub next_state: usize,
    pub reward: ValueVector,
    pub terminal: bool,
    pub count: u64,
}

/// Empirical tabular dynamics model built from real transitions.
#[derive(Debug, Clone)]
pub struct TabularModel {
    actions: usize,
    records: Vec<Vec<ModelRecord>>,
}

impl TabularModel {
    pub fn new(states: usize, actions: usize) -> Self {
        Self { actions, records: vec![Vec::new(); states * actions] }
    }

    pub fn update(&mut self, t: &Transition) {
        let row = &mut self.records[t.state * self.actions + t.action];
        match row
            .iter_mut()
            .find(|r| r.next_state == t.next_state && r.terminal == t.terminal && r.reward == t.reward)
        {
            Some(r) => r.count += 1,
            None => row.push(ModelRecord {
                next_state: t.next_state,
                reward: t.reward.clone(),
                terminal: t.terminal,
                count: 1,
            }),
        }
    }

    pub fn visits(&self, state: usize, action: usize) -> u64 {
        self.records[state * self.actions + action].iter().map(|r| r.count).sum()
    }

    pub fn records(&self, state: usize, action: usize) -> &[ModelRecord] {
        &self.records[state * self.actions + action]
    }

    /// Draws `(s', R, terminal)` proportionally to the recorded counts.
    pub fn sample(&self, state: usize, action: usize, rng: &mut SimRng) -> Result<&ModelRecord> {
        let row = self
            .records
            .get(state * self.actions + action)
            .filter(|_| action < self.actions)
            .ok_or(Error::Unvisited { state, action })?;
        match row.len() {
            0 => Err(Error::Unvisited { state, action }),
            1 => Ok(&row[0]),
            _ => {
                let counts: Vec<f64> = row.iter().map(|r| r.count as f64).collect();
                Ok(&row[rng.categorical(&counts)])
            }
        }
    }
}
