//! Sum-tree backed prioritized transition buffer.
//!
//! Entry `i` is sampled with probability
//! `max(|δ_i|^α, κ) / Σ_j max(|δ_j|^α, κ)` where `δ_i` is its raw priority.
//! Raw priorities are kept next to each transition; the tree stores the
//! transformed masses.

use alloc::vec;
use alloc::vec::Vec;

use crate::momdp::Transition;
use crate::{Error, Result, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferConfig {
    pub capacity: usize,
    /// Exponent applied to raw priorities.
    pub alpha: f64,
    /// Minimum sampling mass of any entry.
    pub kappa: f64,
}

impl Default for BufferConfig {
    fn default() -> Self {
        Self { capacity: 100_000, alpha: 0.6, kappa: 0.001 }
    }
}

impl BufferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("buffer capacity must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1]"));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidConfig("kappa must be positive"));
        }
        Ok(())
    }

    /// `max(|δ|^α, κ)`.
    #[inline]
    pub fn mass(&self, raw: f64) -> f64 {
        libm::pow(raw.abs(), self.alpha).max(self.kappa)
    }
}

/// Binary tree of partial sums over a fixed number of leaves.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    // 1-based heap layout: node k has children 2k and 2k+1; leaves start at `leaves`
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.leaves + leaf]
    }

    /// Sets a leaf and recomputes its ancestors from their children.
    pub fn set(&mut self, leaf: usize, value: f64) {
        let mut k = self.leaves + leaf;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target ∈ [0, total)`.
    pub fn find(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if target < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }

    /// Largest deviation between an internal node and the sum of its children.
    pub fn max_inconsistency(&self) -> f64 {
        (1..self.leaves).map(|k| (self.nodes[k] - self.nodes[2 * k] - self.nodes[2 * k + 1]).abs()).fold(0.0, f64::max)
    }
}

/// Handle to a buffer entry. Becomes stale once the slot is overwritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferIndex {
    pub slot: usize,
    stamp: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityEntry {
    pub transition: Transition,
    pub priority: f64,
    stamp: u64,
}

#[derive(Debug, Clone)]
pub struct PrioritizedBuffer {
    cfg: BufferConfig,
    entries: Vec<PriorityEntry>,
    cursor: usize,
    inserted: u64,
    tree: SumTree,
}

fn check_priority(p: f64) -> Result<f64> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::InvalidConfig("priority must be finite and non-negative"));
    }
    Ok(p)
}

impl PrioritizedBuffer {
    pub fn new(cfg: BufferConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, entries: Vec::new(), cursor: 0, inserted: 0, tree: SumTree::new(cfg.capacity) })
    }

    pub fn config(&self) -> &BufferConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    /// Stores a transition, evicting the oldest entry once full.
    pub fn push(&mut self, transition: Transition, priority: f64) -> Result<BufferIndex> {
        let priority = check_priority(priority)?;
        let stamp = self.inserted;
        self.inserted += 1;
        let slot = self.cursor;
        let entry = PriorityEntry { transition, priority, stamp };
        if slot == self.entries.len() {
            self.entries.push(entry);
        } else {
            self.entries[slot] = entry;
        }
        self.tree.set(slot, self.cfg.mass(priority));
        self.cursor = (self.cursor + 1) % self.cfg.capacity;
        Ok(BufferIndex { slot, stamp })
    }

    fn live(&self, index: BufferIndex) -> Result<&PriorityEntry> {
        match self.entries.get(index.slot) {
            Some(e) if e.stamp == index.stamp => Ok(e),
            _ => Err(Error::StaleIndex { slot: index.slot }),
        }
    }

    pub fn get(&self, index: BufferIndex) -> Result<&PriorityEntry> {
        self.live(index)
    }

    pub fn update_priority(&mut self, index: BufferIndex, priority: f64) -> Result<()> {
        let priority = check_priority(priority)?;
        self.live(index)?;
        self.entries[index.slot].priority = priority;
        self.tree.set(index.slot, self.cfg.mass(priority));
        Ok(())
    }

    /// Recomputes every raw priority, e.g. after the active weight changed.
    pub fn reprioritize(&mut self, mut f: impl FnMut(&Transition) -> Result<f64>) -> Result<()> {
        for slot in 0..self.entries.len() {
            let p = check_priority(f(&self.entries[slot].transition)?)?;
            self.entries[slot].priority = p;
            self.tree.set(slot, self.cfg.mass(p));
        }
        Ok(())
    }

    /// Sampling probability of a slot under the current priorities.
    pub fn probability(&self, slot: usize) -> f64 {
        self.tree.get(slot) / self.tree.total()
    }

    fn index_of(&self, slot: usize) -> BufferIndex {
        BufferIndex { slot, stamp: self.entries[slot].stamp }
    }

    /// Draws an entry proportionally to its transformed priority.
    pub fn sample(&self, rng: &mut SimRng) -> Result<(BufferIndex, &PriorityEntry)> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let mut slot = self.tree.find(rng.unit() * self.tree.total());
        if slot >= self.entries.len() {
            // only reachable through rounding at the right edge
            slot = self.entries.len() - 1;
        }
        Ok((self.index_of(slot), &self.entries[slot]))
    }

    /// Draws an entry uniformly, ignoring priorities.
    pub fn sample_uniform(&self, rng: &mut SimRng) -> Result<(BufferIndex, &PriorityEntry)> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let slot = rng.index(self.entries.len());
        Ok((self.index_of(slot), &self.entries[slot]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momdp::ValueVector;
    use alloc::vec::Vec;

    fn t(s: usize) -> Transition {
        Transition { state: s, action: 0, reward: ValueVector::zeros(2), next_state: s, terminal: false }
    }

    fn cfg(capacity: usize) -> BufferConfig {
        BufferConfig { capacity, alpha: 0.6, kappa: 0.001 }
    }

    fn frequencies(buf: &PrioritizedBuffer, draws: usize, seed: u64) -> Vec<usize> {
        let mut rng = SimRng::seed(seed);
        let mut counts = vec![0; buf.len()];
        for _ in 0..draws {
            counts[buf.sample(&mut rng).unwrap().0.slot] += 1;
        }
        counts
    }

    fn within_three_sigma(count: usize, n: usize, p: f64) -> bool {
        let sigma = libm::sqrt(n as f64 * p * (1.0 - p));
        (count as f64 - n as f64 * p).abs() <= 3.0 * sigma
    }

    #[test]
    fn config_validation() {
        assert!(BufferConfig { capacity: 0, ..cfg(1) }.validate().is_err());
        assert!(BufferConfig { alpha: 0.0, ..cfg(1) }.validate().is_err());
        assert!(BufferConfig { alpha: 1.5, ..cfg(1) }.validate().is_err());
        assert!(BufferConfig { kappa: 0.0, ..cfg(1) }.validate().is_err());
    }

    #[test]
    fn empty_sample_fails() {
        let buf = PrioritizedBuffer::new(cfg(4)).unwrap();
        assert_eq!(buf.sample(&mut SimRng::seed(0)).unwrap_err(), Error::EmptyBuffer);
        assert_eq!(buf.sample_uniform(&mut SimRng::seed(0)).unwrap_err(), Error::EmptyBuffer);
    }

    #[test]
    fn single_entry_always_sampled() {
        let mut buf = PrioritizedBuffer::new(cfg(4)).unwrap();
        buf.push(t(0), 0.7).unwrap();
        assert_eq!(buf.probability(0), 1.0);
        assert_eq!(frequencies(&buf, 1000, 1), vec![1000]);
    }

    #[test]
    fn zero_priorities_are_floored_to_uniform() {
        let mut buf = PrioritizedBuffer::new(cfg(4)).unwrap();
        buf.push(t(0), 0.0).unwrap();
        buf.push(t(1), 0.0).unwrap();
        assert_eq!(buf.probability(0), 0.5);
        assert_eq!(buf.probability(1), 0.5);
    }

    #[test]
    fn two_entry_probability() {
        // 1 / (1 + 0.5^0.6), 0.5^0.6 = exp(0.6 ln 0.5) = 0.659754...
        let expected = 1.0 / (1.0 + libm::exp(0.6 * libm::log(0.5)));
        assert!((expected - 0.6025).abs() < 1e-3);
        let mut buf = PrioritizedBuffer::new(cfg(4)).unwrap();
        buf.push(t(0), 1.0).unwrap();
        buf.push(t(1), 0.5).unwrap();
        assert!((buf.probability(0) - expected).abs() < 1e-12);
        let n = 1_000_000;
        let counts = frequencies(&buf, n, 2);
        assert!(within_three_sigma(counts[0], n, expected), "{counts:?}");
    }

    #[test]
    fn fifo_eviction_and_stale_handles() {
        let mut buf = PrioritizedBuffer::new(cfg(2)).unwrap();
        let first = buf.push(t(0), 1.0).unwrap();
        buf.push(t(1), 1.0).unwrap();
        let third = buf.push(t(2), 1.0).unwrap();
        assert_eq!(buf.len(), 2);
        assert_eq!(third.slot, 0);
        assert_eq!(buf.update_priority(first, 2.0), Err(Error::StaleIndex { slot: 0 }));
        assert!(buf.update_priority(third, 2.0).is_ok());
        assert_eq!(buf.get(third).unwrap().transition.state, 2);
    }

    #[test]
    fn update_to_zero_keeps_floor_mass() {
        let mut buf = PrioritizedBuffer::new(cfg(4)).unwrap();
        let a = buf.push(t(0), 1.0).unwrap();
        buf.push(t(1), 1.0).unwrap();
        buf.update_priority(a, 0.0).unwrap();
        assert_eq!(buf.tree().get(0), 0.001);
        assert!(buf.probability(0) > 0.0);
    }

    #[test]
    fn tree_root_matches_leaves_after_updates() {
        let mut buf = PrioritizedBuffer::new(cfg(7)).unwrap();
        let mut handles = Vec::new();
        for i in 0..7 {
            handles.push(buf.push(t(i), i as f64 * 0.3).unwrap());
        }
        for (i, h) in handles.iter().enumerate() {
            buf.update_priority(*h, 1.0 / (1.0 + i as f64)).unwrap();
        }
        let leaves: f64 = (0..7).map(|i| buf.tree().get(i)).sum();
        assert!((buf.tree().total() - leaves).abs() < 1e-9);
        assert!(buf.tree().max_inconsistency() < 1e-9);
    }

    #[test]
    fn raised_priority_changes_frequency() {
        let mut buf = PrioritizedBuffer::new(cfg(4)).unwrap();
        let handles: Vec<_> = [0.2, 0.4, 0.1, 0.3].iter().enumerate().map(|(i, &p)| buf.push(t(i), p).unwrap()).collect();
        buf.update_priority(handles[2], 1.0).unwrap();
        let c = cfg(4);
        let masses: Vec<f64> = [0.2, 0.4, 1.0, 0.3].iter().map(|&p| c.mass(p)).collect();
        let total: f64 = masses.iter().sum();
        let n = 1_000_000;
        let counts = frequencies(&buf, n, 3);
        for (i, m) in masses.iter().enumerate() {
            assert!(within_three_sigma(counts[i], n, m / total), "slot {i}: {counts:?}");
        }
    }

    #[test]
    fn rejects_bad_priority() {
        let mut buf = PrioritizedBuffer::new(cfg(2)).unwrap();
        assert!(buf.push(t(0), f64::NAN).is_err());
        assert!(buf.push(t(0), -1.0).is_err());
    }
}
