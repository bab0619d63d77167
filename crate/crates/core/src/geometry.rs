//! Exact geometry over finite sets of value vectors.
//!
//! The corner weights of a value set `V` are the weight coordinates of the
//! vertices of
//!
//! ```text
//! P = { (w, u) | v·w - u <= 0 for v in V,  w_i >= 0,  sum_i w_i = 1 }
//! ```
//!
//! i.e. the points of the simplex where the upper envelope `max_v v·w`
//! changes slope, plus the simplex extrema. Vertices are enumerated
//! exhaustively: every choice of `m` inequalities is made tight together
//! with the normalization equality, the resulting `(m+1)×(m+1)` system is
//! solved, and infeasible solutions are discarded. This is cheap for the
//! problem sizes here (`m <= 4`, a few dozen vectors).

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::linalg;
use crate::momdp::{dot, ValueVector, WeightVector};
use crate::{Error, Result};

const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub feasibility_tolerance: f64,
    pub dedup_tolerance: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { feasibility_tolerance: 1e-9, dedup_tolerance: 1e-9 }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tolerance > 0.0) || !(self.dedup_tolerance > 0.0) {
            return Err(Error::InvalidConfig("geometry tolerances must be positive"));
        }
        Ok(())
    }
}

/// A set of value vectors, each tagged with the id of the policy that
/// produced it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValueSet {
    pub vectors: Vec<ValueVector>,
    pub ids: Vec<usize>,
}

impl ValueSet {
    pub fn new(vectors: Vec<ValueVector>) -> Self {
        let ids = (0..vectors.len()).collect();
        Self { vectors, ids }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let vectors = rows.iter().map(|r| ValueVector::new(r.to_vec())).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(vectors))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Objective count, or `None` for an empty set.
    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(ValueVector::dim)
    }

    pub fn push(&mut self, vector: ValueVector, id: usize) {
        self.vectors.push(vector);
        self.ids.push(id);
    }

    /// Union of two sets; ids of `other` are kept as-is.
    pub fn union(&self, other: &ValueSet) -> ValueSet {
        let mut out = self.clone();
        out.vectors.extend(other.vectors.iter().cloned());
        out.ids.extend(other.ids.iter().copied());
        out
    }

    fn check_dim(&self) -> Result<usize> {
        let m = self.dim().ok_or(Error::EmptyInput("value set"))?;
        if let Some(bad) = self.vectors.iter().find(|v| v.dim() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.dim() });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CornerWeightSet {
    pub weights: Vec<WeightVector>,
}

impl CornerWeightSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn iter(&self) -> core::slice::Iter<'_, WeightVector> {
        self.weights.iter()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Indices of the first representative of each group of vectors within
/// `tol` of each other.
fn distinct_indices(set: &ValueSet, tol: f64) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::with_capacity(set.len());
    for (i, v) in set.vectors.iter().enumerate() {
        if !keep.iter().any(|&k| set.vectors[k].max_abs_diff(v) <= tol) {
            keep.push(i);
        }
    }
    keep
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A vertex of the corner-weight polyhedron: weight part and value part.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub weight: WeightVector,
    pub value: f64,
}

/// Enumerates the vertices of the corner-weight polyhedron of `set`
/// (deduplicated by weight coordinates, sorted lexicographically).
pub fn polyhedron_vertices(set: &ValueSet, cfg: &GeometryConfig) -> Result<Vec<Vertex>> {
    cfg.validate()?;
    let m = set.check_dim()?;
    if m < 2 {
        return Err(Error::InvalidWeight("need at least two objectives"));
    }
    let distinct = distinct_indices(set, cfg.dedup_tolerance);
    let vectors: Vec<&[f64]> = distinct.iter().map(|&i| set.vectors[i].as_slice()).collect();
    let n = vectors.len();
    let dim = m + 1;

    // Inequality rows over x = (w_1..w_m, u): value rows first, then -w_i <= 0.
    let row = |c: usize, out: &mut [f64]| {
        out.fill(0.0);
        if c < n {
            out[..m].copy_from_slice(vectors[c]);
            out[m] = -1.0;
        } else {
            out[c - n] = -1.0;
        }
    };
    let slack = |c: usize, x: &[f64]| -> f64 {
        if c < n {
            dot(vectors[c], &x[..m]) - x[m]
        } else {
            -x[c - n]
        }
    };

    let mut raw: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut scratch = vec![0.0; dim];
    for_each_combination(n + m, m, |active| {
        let mut a = vec![0.0; dim * dim];
        let mut b = vec![0.0; dim];
        for (r, &c) in active.iter().enumerate() {
            row(c, &mut scratch);
            a[r * dim..(r + 1) * dim].copy_from_slice(&scratch);
        }
        for k in 0..m {
            a[m * dim + k] = 1.0;
        }
        b[m] = 1.0;
        let Some(x) = linalg::solve(a, b, SINGULAR_TOLERANCE) else { return };
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        let scale = 1.0 + x[m].abs();
        let feasible = (0..n + m).all(|c| slack(c, &x) <= cfg.feasibility_tolerance * scale);
        if feasible {
            raw.push((x[..m].to_vec(), x[m]));
        }
    });

    let mut vertices: Vec<Vertex> = Vec::with_capacity(raw.len());
    for (w, _) in raw {
        let weight = WeightVector::normalized(w)?;
        // the value coordinate at a vertex is the envelope height there
        let value = vectors.iter().map(|v| dot(v, &weight)).fold(f64::NEG_INFINITY, f64::max);
        vertices.push(Vertex { weight, value });
    }
    vertices.sort_by(|a, b| lex_cmp(&a.weight, &b.weight));
    let mut out: Vec<Vertex> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if !out.iter().any(|k| k.weight.max_abs_diff(&v.weight) <= cfg.dedup_tolerance) {
            out.push(v);
        }
    }
    Ok(out)
}

/// Corner weights of a value set, sorted lexicographically.
pub fn corner_weights(set: &ValueSet, cfg: &GeometryConfig) -> Result<CornerWeightSet> {
    let weights = polyhedron_vertices(set, cfg)?.into_iter().map(|v| v.weight).collect();
    Ok(CornerWeightSet { weights })
}

/// For each vector of `set`, whether it survives linear-dominance pruning.
///
/// A vector survives if it attains the upper envelope (within the
/// feasibility tolerance) at some weight of the simplex, and it is not a
/// duplicate (within the dedup tolerance) of an earlier vector. The set of
/// weights where a vector attains the envelope is a face of the
/// corner-weight polyhedron, so testing the corner weights suffices.
pub fn dominance_mask(set: &ValueSet, cfg: &GeometryConfig) -> Result<Vec<bool>> {
    let corners = corner_weights(set, cfg)?;
    let distinct = distinct_indices(set, cfg.dedup_tolerance);
    let mut mask = vec![false; set.len()];
    for &i in &distinct {
        let v = &set.vectors[i];
        mask[i] = corners.iter().any(|w| {
            let best = distinct.iter().map(|&j| dot(&set.vectors[j], w)).fold(f64::NEG_INFINITY, f64::max);
            dot(v, w) >= best - cfg.feasibility_tolerance * (1.0 + best.abs())
        });
    }
    Ok(mask)
}

/// Removes linearly dominated vectors and duplicates, keeping input order.
pub fn remove_dominated(set: &ValueSet, cfg: &GeometryConfig) -> Result<ValueSet> {
    let mask = dominance_mask(set, cfg)?;
    let mut out = ValueSet::default();
    for (i, keep) in mask.into_iter().enumerate() {
        if keep {
            out.push(set.vectors[i].clone(), set.ids[i]);
        }
    }
    Ok(out)
}

/// `max_i v_i · w` and the lowest index attaining it.
pub fn max_scalarized(set: &ValueSet, w: &WeightVector) -> Result<(f64, usize)> {
    let first = set.vectors.first().ok_or(Error::EmptyInput("value set"))?;
    let mut best = (crate::momdp::scalarize(first, w)?, 0);
    for (i, v) in set.vectors.iter().enumerate().skip(1) {
        let u = crate::momdp::scalarize(v, w)?;
        if u > best.0 {
            best = (u, i);
        }
    }
    Ok(best)
}

/// All weights with coordinates in `{0, 1/h, ..., 1}` (Das–Dennis simplex
/// lattice), lexicographically sorted.
pub fn das_dennis(h: usize, m: usize) -> Result<Vec<WeightVector>> {
    if m < 2 {
        return Err(Error::InvalidWeight("need at least two objectives"));
    }
    if h == 0 {
        return Err(Error::InvalidConfig("lattice parameter must be positive"));
    }
    fn compose(left: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            compose(left - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    compose(h, m, &mut Vec::with_capacity(m), &mut parts);
    parts
        .into_iter()
        .map(|p| WeightVector::new(p.into_iter().map(|k| k as f64 / h as f64).collect()))
        .collect()
}

/// Number of Das–Dennis lattice points for parameter `h` in `m` dimensions:
/// `C(h + m - 1, m - 1)`.
pub fn lattice_size(h: usize, m: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 0..(m - 1) {
        acc = acc * (h + 1 + i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// Roughly `n` weights covering the simplex.
///
/// For `m = 2` this is exactly `n` evenly spaced points. For `m >= 3` it is
/// the Das–Dennis lattice whose size is closest to `n` (ties pick the
/// smaller lattice); the returned length reports the actual count.
pub fn equidistant_weights(n: usize, m: usize) -> Result<Vec<WeightVector>> {
    if m < 2 {
        return Err(Error::InvalidWeight("need at least two objectives"));
    }
    if n < m {
        return Err(Error::InvalidConfig("need at least as many weights as objectives"));
    }
    if m == 2 {
        let last = (n - 1) as f64;
        return (0..n)
            .map(|i| WeightVector::new(vec![i as f64 / last, (n - 1 - i) as f64 / last]))
            .collect();
    }
    let mut h = 1;
    while lattice_size(h + 1, m) <= n {
        h += 1;
    }
    let below = lattice_size(h, m);
    let above = lattice_size(h + 1, m);
    if above - n < n - below {
        h += 1;
    }
    das_dennis(h, m)
}
