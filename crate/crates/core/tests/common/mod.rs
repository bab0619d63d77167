//! Reference computations for the integration tests. Everything here is
//! written independently of the library's solvers: brute-force policy
//! enumeration, plain iterative evaluation and textbook value iteration.
#![allow(dead_code)]

use morl_core::environments::random_momdp;
use morl_core::geometry::{corner_weights, das_dennis, GeometryConfig, ValueSet};
use morl_core::gpi::{priority, PolicyLibrary};
use morl_core::{MoQTable, Momdp, Outcome, SimRng, Transition, ValueVector, WeightVector};

const EVAL_TOLERANCE: f64 = 1e-13;
const MAX_SWEEPS: usize = 1_000_000;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_dot(vs: &[Vec<f64>], w: &[f64]) -> f64 {
    vs.iter().map(|v| dot(v, w)).fold(f64::NEG_INFINITY, f64::max)
}

/// Flat Dirichlet(1, ..., 1) sample.
pub fn random_weight(rng: &mut SimRng, m: usize) -> WeightVector {
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.unit()).ln()).collect();
    WeightVector::normalized(raw).unwrap()
}

/// About 10^4 evenly spaced simplex points and their spacing.
pub fn fine_grid(m: usize) -> (Vec<WeightVector>, f64) {
    match m {
        2 => {
            let n = 10_000;
            let h = 1.0 / (n - 1) as f64;
            let grid = (0..n)
                .map(|i| {
                    let a = i as f64 * h;
                    WeightVector::new(vec![a, 1.0 - a]).unwrap()
                })
                .collect();
            (grid, h)
        }
        3 => (das_dennis(140, 3).unwrap(), 1.0 / 140.0),
        _ => panic!("fine grid only for two or three objectives"),
    }
}

/// Every deterministic stationary policy, as an action per state.
pub fn all_policies(states: usize, actions: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; states]];
    for s in 0..states {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..actions).map(move |a| {
                    let mut q = p.clone();
                    q[s] = a;
                    q
                })
            })
            .collect();
    }
    out
}

fn backup(env: &Momdp, s: usize, a: usize, values: &[Vec<f64>]) -> Vec<f64> {
    let m = env.objective_count();
    let mut q = vec![0.0; m];
    for o in env.outcomes(s, a) {
        for k in 0..m {
            let next = if o.terminal { 0.0 } else { values[o.next_state][k] };
            q[k] += o.probability * (o.reward[k] + env.gamma() * next);
        }
    }
    q
}

/// Vector state values of `policy` by Jacobi sweeps.
pub fn evaluate(env: &Momdp, policy: &[usize]) -> Vec<Vec<f64>> {
    let m = env.objective_count();
    let mut v = vec![vec![0.0; m]; env.state_count()];
    for _ in 0..MAX_SWEEPS {
        let next: Vec<Vec<f64>> = (0..env.state_count()).map(|s| backup(env, s, policy[s], &v)).collect();
        let change = next
            .iter()
            .zip(&v)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        v = next;
        if change < EVAL_TOLERANCE {
            return v;
        }
    }
    panic!("policy evaluation did not converge");
}

pub fn start_value(env: &Momdp, values: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; env.objective_count()];
    for (s, p) in env.initial_distribution().iter().enumerate() {
        for k in 0..out.len() {
            out[k] += p * values[s][k];
        }
    }
    out
}

/// Vector action values `q^π(s, a)` from state values.
pub fn q_table(env: &Momdp, values: &[Vec<f64>]) -> MoQTable {
    let mut q = MoQTable::for_env(env);
    for s in 0..env.state_count() {
        for a in 0..env.action_count() {
            q.set(s, a, &backup(env, s, a, values));
        }
    }
    q
}

/// Scalarized `q(s, a)` flattened as `s * A + a`.
pub fn scalar_q(q: &MoQTable, w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.states() * q.actions());
    for s in 0..q.states() {
        for a in 0..q.actions() {
            out.push(dot(q.get(s, a), w));
        }
    }
    out
}

/// Optimal scalarized action values by value iteration.
pub fn optimal_q(env: &Momdp, w: &[f64]) -> Vec<f64> {
    let (n, na) = (env.state_count(), env.action_count());
    let mut v = vec![0.0; n];
    let q_of = |v: &[f64]| -> Vec<f64> {
        let mut q = vec![0.0; n * na];
        for s in 0..n {
            for a in 0..na {
                q[s * na + a] = env
                    .outcomes(s, a)
                    .iter()
                    .map(|o| o.probability * (dot(&o.reward, w) + if o.terminal { 0.0 } else { env.gamma() * v[o.next_state] }))
                    .sum();
            }
        }
        q
    };
    for _ in 0..MAX_SWEEPS {
        let q = q_of(&v);
        let next: Vec<f64> = (0..n).map(|s| q[s * na..(s + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change < EVAL_TOLERANCE {
            return q_of(&v);
        }
    }
    panic!("value iteration did not converge");
}

/// Start-state values of every deterministic policy.
pub fn brute_force_values(env: &Momdp) -> Vec<Vec<f64>> {
    all_policies(env.state_count(), env.action_count())
        .iter()
        .map(|p| start_value(env, &evaluate(env, p)))
        .collect()
}

pub fn to_value_set(vs: &[Vec<f64>]) -> ValueSet {
    ValueSet::new(vs.iter().map(|v| ValueVector::new(v.clone()).unwrap()).collect())
}

pub fn set_rows(set: &ValueSet) -> Vec<Vec<f64>> {
    set.vectors.iter().map(|v| v.as_slice().to_vec()).collect()
}

/// Largest `|max_a v·w - max_b v·w|` over the fine grid plus the corner
/// weights of both sets. Zero means both sets cover the same utilities.
pub fn coverage_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let m = a[0].len();
    let geometry = GeometryConfig::default();
    let (mut weights, _) = fine_grid(m);
    weights.extend(corner_weights(&to_value_set(a), &geometry).unwrap().weights);
    weights.extend(corner_weights(&to_value_set(b), &geometry).unwrap().weights);
    weights.iter().map(|w| (max_dot(a, w) - max_dot(b, w)).abs()).fold(0.0, f64::max)
}

/// Random MOMDPs with 2 to 6 states, 2 or 3 actions and 2 or 3 objectives.
pub fn random_envs(count: usize, seed: u64) -> Vec<Momdp> {
    let mut rng = SimRng::seed(seed);
    (0..count)
        .map(|i| {
            let states = 2 + i % 5;
            let actions = 2 + i % 2;
            let m = 2 + (i / 2) % 2;
            random_momdp(&mut rng, states, actions, m, 0.9, 0.1).unwrap()
        })
        .collect()
}

/// Four states, two actions, deterministic, γ = 0.9. Each objective has a
/// branch worth pursuing and state 3 offers a terminal compromise.
pub fn four_state() -> Momdp {
    let o = |next: usize, r: [f64; 2], terminal: bool| vec![Outcome::new(1.0, next, r.to_vec(), terminal)];
    let outcomes = vec![
        o(1, [1.0, 0.0], false),
        o(2, [0.0, 1.0], false),
        o(3, [3.0, 0.0], false),
        o(1, [0.5, 0.5], false),
        o(3, [0.0, 3.0], false),
        o(0, [0.2, 0.2], false),
        o(0, [0.1, 0.3], false),
        o(3, [1.0, 1.0], true),
    ];
    Momdp::new(4, 2, 2, 0.9, vec![1.0, 0.0, 0.0, 0.0], outcomes).unwrap()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub checks: usize,
    pub violations: usize,
    pub worst: f64,
}

impl Tally {
    pub fn record(&mut self, ok: bool, margin: f64) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
        }
        self.worst = self.worst.max(margin);
    }
}

/// Outcome of the corner-maximizer check for one batch of random sets.
#[derive(Debug, Default, Clone, Copy)]
pub struct CornerCheck {
    /// Grid maximizer within one grid cell of a corner weight of V.
    pub location: Tally,
    /// Grid maximum not above the maximum over the corner weights of V.
    pub value: Tally,
    /// Violations of the location form by objective count (`m = 2`, `m = 3`).
    pub location_by_dim: [usize; 2],
}

/// Utility loss `max_{V*} v·w - max_V v·w` is maximized at a corner weight
/// of V. Sets alternate between two and three objectives; V holds 1 to 6
/// vectors and V* adds 1 to 4 more. For `location`, `worst` is the largest
/// distance from a grid maximizer to its nearest corner; for `value` it is
/// the largest excess of the grid maximum over the corner maximum.
pub fn corner_maximizer_check(rng: &mut SimRng, sets: usize) -> CornerCheck {
    let geometry = GeometryConfig::default();
    let grids = [fine_grid(2), fine_grid(3)];
    let mut out = CornerCheck::default();
    for i in 0..sets {
        let m = 2 + i % 2;
        let (grid, h) = &grids[m - 2];
        let n = 1 + rng.index(6);
        let v: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| 10.0 * rng.unit()).collect()).collect();
        let extra = 1 + rng.index(4);
        let mut reference = v.clone();
        reference.extend((0..extra).map(|_| (0..m).map(|_| 10.0 * rng.unit()).collect::<Vec<f64>>()));
        let loss = |w: &[f64]| max_dot(&reference, w) - max_dot(&v, w);
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, w) in grid.iter().enumerate() {
            let l = loss(w);
            if l > best.0 {
                best = (l, j);
            }
        }
        let maximizer = &grid[best.1];
        let corners = corner_weights(&to_value_set(&v), &geometry).unwrap();
        let distance = corners.iter().map(|c| c.max_abs_diff(maximizer)).fold(f64::INFINITY, f64::min);
        let near = distance <= h + 1e-12;
        out.location.record(near, distance);
        if !near {
            out.location_by_dim[m - 2] += 1;
        }
        let at_corners = corners.iter().map(|c| loss(c)).fold(f64::NEG_INFINITY, f64::max);
        let excess = best.0 - at_corners;
        out.value.record(excess <= 1e-12, excess);
    }
    out
}

/// GPI policy for `w` over exact q-tables.
pub fn gpi_policy(tables: &[MoQTable], w: &[f64]) -> Vec<usize> {
    let (n, na) = (tables[0].states(), tables[0].actions());
    (0..n)
        .map(|s| {
            let mut best = (f64::NEG_INFINITY, 0);
            for a in 0..na {
                let value = tables.iter().map(|q| dot(q.get(s, a), w)).fold(f64::NEG_INFINITY, f64::max);
                if value > best.0 {
                    best = (value, a);
                }
            }
            best.1
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Exact q-table of every deterministic policy.
pub fn policy_tables(env: &Momdp) -> Vec<(Vec<usize>, MoQTable)> {
    all_policies(env.state_count(), env.action_count())
        .into_iter()
        .map(|p| {
            let q = q_table(env, &evaluate(env, &p));
            (p, q)
        })
        .collect()
}

/// The no-improvement characterization, checked both ways for every
/// policy π, every weight in `weights` and the libraries `{π}`, `{π, π'}`
/// and all policies (π is always the first member and the active one):
///
/// * DP form: `q^GPI_w = q^π_w` everywhere iff `q*_w = q^π_w` everywhere.
/// * Priority form: the one-step GPI priority with π active vanishes on every
///   `(s, a)` iff `q*_w = q^π_w` everywhere.
pub fn no_improvement_check(env: &Momdp, weights: &[WeightVector], tol: f64) -> (Tally, Tally) {
    assert!(env.is_deterministic(), "priority form needs deterministic transitions");
    let tables = policy_tables(env);
    let (mut dp, mut prio) = (Tally::default(), Tally::default());
    for w in weights {
        let q_star = optimal_q(env, w);
        for (i, (_, q_pi)) in tables.iter().enumerate() {
            let own = scalar_q(q_pi, w);
            let optimal = max_abs_diff(&own, &q_star) < tol;
            let mut libraries: Vec<Vec<usize>> = vec![vec![i]];
            libraries.extend((0..tables.len()).filter(|&j| j != i).map(|j| vec![i, j]));
            libraries.push(core::iter::once(i).chain((0..tables.len()).filter(|&j| j != i)).collect());
            for members in libraries {
                let qs: Vec<MoQTable> = members.iter().map(|&j| tables[j].1.clone()).collect();
                let gpi = gpi_policy(&qs, w);
                let q_gpi = scalar_q(&q_table(env, &evaluate(env, &gpi)), w);
                let gap = max_abs_diff(&q_gpi, &own);
                dp.record((gap < tol) == optimal, gap);

                let mut lib = PolicyLibrary::new();
                for q in qs {
                    lib.push(q, w.clone(), ValueVector::zeros(env.objective_count()));
                }
                let mut worst: f64 = 0.0;
                for s in 0..env.state_count() {
                    for a in 0..env.action_count() {
                        let o = &env.outcomes(s, a)[0];
                        let t = Transition {
                            state: s,
                            action: a,
                            reward: o.reward.clone(),
                            next_state: o.next_state,
                            terminal: o.terminal,
                        };
                        worst = worst.max(priority(&lib, &t, w, 0, env.gamma()).unwrap());
                    }
                }
                prio.record((worst < tol) == optimal, worst);
            }
        }
    }
    (dp, prio)
}

/// The GPI suboptimality bound
/// `q*_w - q^GPI_w <= 2/(1-γ) (r_max min_i ||w - w_i|| + δ)` for `weights`
/// random weights against `libraries` exactly evaluated libraries. Half the
/// libraries hold optimal policies for their weights (δ ≈ 0), the rest hold
/// arbitrary policies. `worst` is the largest ratio of gap to bound.
pub fn gpi_bound_check(env: &Momdp, rng: &mut SimRng, libraries: usize, weights: usize, slack: f64) -> Tally {
    let m = env.objective_count();
    let tables = policy_tables(env);
    let r_max = (0..env.state_count())
        .flat_map(|s| (0..env.action_count()).flat_map(move |a| env.outcomes(s, a).iter()))
        .map(|o| dot(&o.reward, &o.reward).sqrt())
        .fold(0.0, f64::max);
    let factor = 2.0 / (1.0 - env.gamma());
    let mut tally = Tally::default();
    for l in 0..libraries {
        let size = 1 + rng.index(4);
        let mut members: Vec<(WeightVector, MoQTable)> = Vec::new();
        for _ in 0..size {
            let wi = random_weight(rng, m);
            let q = if l % 2 == 0 {
                let q_star = optimal_q(env, &wi);
                let (_, q) = tables
                    .iter()
                    .min_by(|a, b| max_abs_diff(&scalar_q(&a.1, &wi), &q_star).total_cmp(&max_abs_diff(&scalar_q(&b.1, &wi), &q_star)))
                    .unwrap();
                q.clone()
            } else {
                tables[rng.index(tables.len())].1.clone()
            };
            members.push((wi, q));
        }
        let delta = members
            .iter()
            .map(|(wi, q)| max_abs_diff(&optimal_q(env, wi), &scalar_q(q, wi)))
            .fold(0.0, f64::max);
        let qs: Vec<MoQTable> = members.iter().map(|(_, q)| q.clone()).collect();
        for _ in 0..weights {
            let w = random_weight(rng, m);
            let distance = members
                .iter()
                .map(|(wi, _)| wi.iter().zip(w.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            let bound = factor * (r_max * distance + delta);
            let q_star = optimal_q(env, &w);
            let q_gpi = scalar_q(&q_table(env, &evaluate(env, &gpi_policy(&qs, &w))), &w);
            let gap = q_star.iter().zip(&q_gpi).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
            tally.record(gap <= bound + slack, if bound > 0.0 { gap / bound } else { gap });
        }
    }
    tally
}
