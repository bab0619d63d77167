//! Generalized policy evaluation and improvement over a policy library.

use alloc::vec::Vec;

use crate::geometry::ValueSet;
use crate::momdp::{dot, MoQTable, Transition, ValueVector, WeightVector};
use crate::{Error, Result};

/// A set of policies, each with its multi-objective q-table, the weight it
/// was trained for, and its (estimated) value vector. The three lists are
/// index-aligned.
#[derive(Debug, Clone, Default)]
pub struct PolicyLibrary {
    q_tables: Vec<MoQTable>,
    weight_support: Vec<WeightVector>,
    value_vectors: Vec<ValueVector>,
    ids: Vec<usize>,
    next_id: usize,
}

impl PolicyLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a policy and returns its index. Ids are never reused.
    pub fn push(&mut self, q: MoQTable, weight: WeightVector, value: ValueVector) -> usize {
        self.q_tables.push(q);
        self.weight_support.push(weight);
        self.value_vectors.push(value);
        self.ids.push(self.next_id);
        self.next_id += 1;
        self.q_tables.len() - 1
    }

    pub fn len(&self) -> usize {
        self.q_tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_tables.is_empty()
    }

    pub fn q(&self, i: usize) -> &MoQTable {
        &self.q_tables[i]
    }

    pub fn q_mut(&mut self, i: usize) -> &mut MoQTable {
        &mut self.q_tables[i]
    }

    pub fn q_tables(&self) -> &[MoQTable] {
        &self.q_tables
    }

    pub fn weight(&self, i: usize) -> &WeightVector {
        &self.weight_support[i]
    }

    pub fn weights(&self) -> &[WeightVector] {
        &self.weight_support
    }

    pub fn value(&self, i: usize) -> &ValueVector {
        &self.value_vectors[i]
    }

    pub fn values(&self) -> &[ValueVector] {
        &self.value_vectors
    }

    pub fn set_value(&mut self, i: usize, value: ValueVector) {
        self.value_vectors[i] = value;
    }

    /// Stable id of the policy at index `i`.
    pub fn id(&self, i: usize) -> usize {
        self.ids[i]
    }

    pub fn index_of_id(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// Value vectors as a set tagged with policy ids.
    pub fn value_set(&self) -> ValueSet {
        ValueSet { vectors: self.value_vectors.clone(), ids: self.ids.clone() }
    }

    /// Keeps the policies whose mask entry is `true`.
    pub fn retain(&mut self, mask: &[bool]) {
        assert_eq!(mask.len(), self.len(), "mask length");
        retain_by_mask(&mut self.q_tables, mask);
        retain_by_mask(&mut self.weight_support, mask);
        retain_by_mask(&mut self.value_vectors, mask);
        retain_by_mask(&mut self.ids, mask);
    }

    fn check(&self, policy: usize, state: usize, action: usize) -> Result<&MoQTable> {
        let q = self
            .q_tables
            .get(policy)
            .ok_or(Error::IndexOutOfRange { what: "policy", index: policy, bound: self.len() })?;
        if state >= q.states() {
            return Err(Error::IndexOutOfRange { what: "state", index: state, bound: q.states() });
        }
        if action >= q.actions() {
            return Err(Error::IndexOutOfRange { what: "action", index: action, bound: q.actions() });
        }
        Ok(q)
    }
}

fn retain_by_mask<T>(items: &mut Vec<T>, mask: &[bool]) {
    let mut keep = mask.iter();
    items.retain(|_| *keep.next().expect("mask length"));
}

/// Generalized policy evaluation: `q^{π_i}(s,a) · w`.
pub fn gpe(lib: &PolicyLibrary, policy: usize, state: usize, action: usize, w: &WeightVector) -> Result<f64> {
    let q = lib.check(policy, state, action)?;
    if q.objectives() != w.dim() {
        return Err(Error::DimensionMismatch { expected: q.objectives(), found: w.dim() });
    }
    Ok(q.scalarized(state, action, w))
}

/// `max_i q^{π_i}(s,a) · w` for a non-empty library.
#[inline]
fn best_over_policies(lib: &PolicyLibrary, state: usize, action: usize, w: &[f64]) -> (f64, usize) {
    let mut best = (lib.q_tables[0].scalarized(state, action, w), 0);
    for (i, q) in lib.q_tables.iter().enumerate().skip(1) {
        let v = q.scalarized(state, action, w);
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// GPI action with the value it attains and the policy that supplied it.
/// Ties go to the lowest action, then the lowest policy index.
pub fn gpi_choice(lib: &PolicyLibrary, state: usize, w: &[f64]) -> Result<(usize, usize, f64)> {
    let first = lib.q_tables.first().ok_or(Error::EmptyLibrary)?;
    if state >= first.states() {
        return Err(Error::IndexOutOfRange { what: "state", index: state, bound: first.states() });
    }
    let (v0, p0) = best_over_policies(lib, state, 0, w);
    let mut best = (0, p0, v0);
    for a in 1..first.actions() {
        let (v, p) = best_over_policies(lib, state, a, w);
        if v > best.2 {
            best = (a, p, v);
        }
    }
    Ok(best)
}

/// `argmax_a max_i q^{π_i}(s,a) · w`.
pub fn gpi_action(lib: &PolicyLibrary, state: usize, w: &[f64]) -> Result<usize> {
    gpi_choice(lib, state, w).map(|(a, _, _)| a)
}

/// `max_a max_i q^{π_i}(s,a) · w`.
pub fn gpi_value(lib: &PolicyLibrary, state: usize, w: &[f64]) -> Result<f64> {
    gpi_choice(lib, state, w).map(|(_, _, v)| v)
}

/// Value of acting greedily with respect to the library for one step:
/// `R·w + γ max_{a'} max_i q^{π_i}(s',a')·w`, without bootstrap past a
/// terminal transition.
pub fn one_step_gpi_target(lib: &PolicyLibrary, t: &Transition, w: &WeightVector, gamma: f64) -> Result<f64> {
    if t.reward.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: t.reward.dim() });
    }
    let bootstrap = if t.terminal { 0.0 } else { gpi_value(lib, t.next_state, w)? };
    Ok(dot(&t.reward, w) + gamma * bootstrap)
}

/// GPI-based experience priority: the gap between the one-step GPI target
/// and the active policy's own scalarized estimate.
pub fn priority(lib: &PolicyLibrary, t: &Transition, w: &WeightVector, active: usize, gamma: f64) -> Result<f64> {
    let current = gpe(lib, active, t.state, t.action, w)?;
    let target = one_step_gpi_target(lib, t, w, gamma)?;
    Ok((target - current).abs())
}

/// Classic single-policy TD-error priority `|R·w + γ max_a' q(s',a')·w - q(s,a)·w|`.
pub fn td_error_priority(q: &MoQTable, t: &Transition, w: &[f64], gamma: f64) -> f64 {
    let bootstrap = if t.terminal {
        0.0
    } else {
        let mut best = q.scalarized(t.next_state, 0, w);
        for a in 1..q.actions() {
            let v = q.scalarized(t.next_state, a, w);
            if v > best {
                best = v;
            }
        }
        best
    };
    let target = dot(&t.reward, w) + gamma * bootstrap;
    (target - q.scalarized(t.state, t.action, w)).abs()
}
