//! Tabular GPI-prioritized Dyna.

use alloc::vec::Vec;

use super::{epsilon_greedy, evaluate_policy_value, new_policy_init, select_weights, td_update};
use super::{DynaSampling, GpiLsState, LearnerConfig, TabularModel};
use crate::buffer::{BufferConfig, BufferIndex, PrioritizedBuffer};
use crate::geometry::GeometryConfig;
use crate::gpi::{gpi_action, priority, PolicyLibrary};
use crate::momdp::{MoQTable, Momdp, Transition, ValueVector, WeightVector};
use crate::oracle::Evaluator;
use crate::{Result, SimRng};

/// Value vector of the policy greedy in its own table for its own weight.
fn evaluate_member(env: &Momdp, lib: &PolicyLibrary, i: usize, cfg: &LearnerConfig) -> Result<ValueVector> {
    let greedy = lib.q(i).greedy_policy(lib.weight(i));
    evaluate_policy_value(env, &|s| greedy[s], &cfg.estimator)
}

/// TD step on every policy, the active one first. Each policy bootstraps
/// with the library's GPI action for its own weight.
fn update_library(lib: &mut PolicyLibrary, t: &Transition, active: usize, cfg: &LearnerConfig, gamma: f64) -> Result<()> {
    let order = core::iter::once(active).chain((0..lib.len()).filter(|&i| i != active));
    for i in order {
        update_member(lib, t, i, cfg, gamma)?;
    }
    Ok(())
}

fn update_member(lib: &mut PolicyLibrary, t: &Transition, i: usize, cfg: &LearnerConfig, gamma: f64) -> Result<()> {
    let next = if t.terminal { 0 } else { gpi_action(lib, t.next_state, lib.weight(i))? };
    td_update(lib.q_mut(i), t, next, cfg.learning_rate, gamma);
    Ok(())
}

struct Run<'a> {
    env: &'a Momdp,
    cfg: &'a LearnerConfig,
    geometry: &'a GeometryConfig,
    state: GpiLsState,
    /// Library index of the policy being trained.
    active: usize,
    weight: WeightVector,
    /// Tables at the previous refresh, by policy id.
    snapshots: Vec<(usize, MoQTable)>,
    buffer: PrioritizedBuffer,
    model: TabularModel,
}

impl Run<'_> {
    fn priority_of(&self, t: &Transition) -> Result<f64> {
        match self.cfg.sampling {
            DynaSampling::Gpi => priority(&self.state.library, t, &self.weight, self.active, self.env.gamma()),
            DynaSampling::Uniform => Ok(0.0),
        }
    }

    fn real_step(&mut self, s: usize, steps: u64, rng: &mut SimRng) -> Result<Transition> {
        let eps = self.cfg.epsilon.value(steps);
        let a = epsilon_greedy(&self.state.library, s, &self.weight, eps, rng)?;
        let t = self.env.step(s, a, rng)?;
        update_library(&mut self.state.library, &t, self.active, self.cfg, self.env.gamma())?;
        let p = self.priority_of(&t)?;
        self.buffer.push(t.clone(), p)?;
        self.model.update(&t);
        for _ in 0..self.cfg.dyna_steps {
            self.dyna_step(rng)?;
        }
        Ok(t)
    }

    fn dyna_step(&mut self, rng: &mut SimRng) -> Result<()> {
        let (index, entry): (BufferIndex, _) = match self.cfg.sampling {
            DynaSampling::Gpi => self.buffer.sample(rng)?,
            DynaSampling::Uniform => self.buffer.sample_uniform(rng)?,
        };
        let (s, a) = (entry.transition.state, entry.transition.action);
        let rec = self.model.sample(s, a, rng)?;
        let sim = Transition {
            state: s,
            action: a,
            reward: rec.reward.clone(),
            next_state: rec.next_state,
            terminal: rec.terminal,
        };
        let gamma = self.env.gamma();
        update_member(&mut self.state.library, &sim, self.active, self.cfg, gamma)?;
        if self.cfg.sampling == DynaSampling::Gpi {
            let p = self.priority_of(&sim)?;
            self.buffer.update_priority(index, p)?;
        }
        for i in 0..self.state.library.len() {
            if i != self.active {
                update_member(&mut self.state.library, &sim, i, self.cfg, gamma)?;
            }
        }
        Ok(())
    }

    fn snapshot(&mut self) {
        let lib = &self.state.library;
        self.snapshots = (0..lib.len()).map(|i| (lib.id(i), lib.q(i).clone())).collect();
    }

    /// Re-evaluates the library and marks weights whose policy stopped
    /// changing since the last refresh as finished.
    fn evaluate_and_finish(&mut self) -> Result<()> {
        let tol = self.geometry.dedup_tolerance;
        for i in 0..self.state.library.len() {
            let value = evaluate_member(self.env, &self.state.library, i, self.cfg)?;
            self.state.library.set_value(i, value);
            let lib = &self.state.library;
            let Some((_, old)) = self.snapshots.iter().find(|(id, _)| *id == lib.id(i)) else {
                continue;
            };
            let w = lib.weight(i);
            let q = lib.q(i);
            if q.max_scalarized_diff(old, w) < self.cfg.done_tolerance && q.greedy_policy(w) == old.greedy_policy(w) {
                let w = w.clone();
                self.state.mark_finished(&w, tol);
            }
        }
        Ok(())
    }

    /// Starts training for `w`: continues an existing policy with that
    /// support weight, or copies the best incumbent for it.
    fn activate(&mut self, w: WeightVector) -> Result<()> {
        let tol = self.geometry.dedup_tolerance;
        let lib = &self.state.library;
        self.active = match (0..lib.len()).find(|&i| lib.weight(i).max_abs_diff(&w) <= tol) {
            Some(i) => i,
            None => {
                let q = new_policy_init(lib, &w, self.env.state_count(), self.env.action_count());
                let i = self.state.library.push(q, w.clone(), ValueVector::zeros(w.dim()));
                let value = evaluate_member(self.env, &self.state.library, i, self.cfg)?;
                self.state.library.set_value(i, value);
                i
            }
        };
        self.weight = w;
        if self.cfg.sampling == DynaSampling::Gpi {
            let (lib, w, active, gamma) = (&self.state.library, &self.weight, self.active, self.env.gamma());
            self.buffer.reprioritize(|t| priority(lib, t, w, active, gamma))?;
        }
        Ok(())
    }

    /// One weight refresh. Returns `false` once no weight is left to train.
    fn refresh(&mut self, steps: u64, evaluator: Option<&Evaluator>, last: bool) -> Result<bool> {
        self.evaluate_and_finish()?;
        self.state.prune(self.geometry)?;
        if let Some(ev) = evaluator {
            let row = ev.record(self.state.iteration, steps, &self.state.library.value_set())?;
            self.state.trace.push(row)?;
        }
        if last {
            return Ok(false);
        }
        let selected = select_weights(&self.state, self.env, &self.cfg.estimator, self.geometry, self.cfg.top_k)?;
        let Some(first) = selected.first().cloned() else {
            return Ok(false);
        };
        // extra top-k weights get policies that learn alongside the active one
        for w in selected.into_iter().skip(1) {
            self.activate(w)?;
        }
        self.activate(first)?;
        self.snapshot();
        Ok(true)
    }
}

/// Runs tabular GPI-PD until `max_iterations` weight refreshes or until no
/// unfinished corner weight remains.
///
/// Each refresh (every `steps_per_iteration` real steps) re-evaluates the
/// library, prunes dominated policies, records a trace row when an
/// evaluator is given, and picks the next weight as in GPI linear support.
/// With `dyna_steps = 0` this is the model-free GPI-LS learner.
pub fn gpi_pd_run(
    env: &Momdp,
    cfg: &LearnerConfig,
    buffer_cfg: &BufferConfig,
    geometry: &GeometryConfig,
    evaluator: Option<&Evaluator>,
    rng: &mut SimRng,
) -> Result<GpiLsState> {
    cfg.validate()?;
    buffer_cfg.validate()?;
    geometry.validate()?;
    let m = env.objective_count();
    let mut run = Run {
        env,
        cfg,
        geometry,
        state: GpiLsState::default(),
        active: 0,
        weight: WeightVector::extremum(m, 0)?,
        snapshots: Vec::new(),
        buffer: PrioritizedBuffer::new(*buffer_cfg)?,
        model: TabularModel::new(env.state_count(), env.action_count()),
    };
    run.activate(WeightVector::extremum(m, 0)?)?;
    run.snapshot();
    if let Some(ev) = evaluator {
        let row = ev.record(0, 0, &run.state.library.value_set())?;
        run.state.trace.push(row)?;
    }

    let mut steps: u64 = 0;
    let mut state: Option<usize> = None;
    let mut episode_len = 0usize;
    loop {
        for _ in 0..cfg.steps_per_iteration {
            let s = match state {
                Some(s) if env.horizon().is_none_or(|h| episode_len < h) => s,
                _ => {
                    episode_len = 0;
                    env.reset(rng)
                }
            };
            let t = run.real_step(s, steps, rng)?;
            steps += 1;
            episode_len += 1;
            state = (!t.terminal).then_some(t.next_state);
        }
        run.state.iteration += 1;
        let last = run.state.iteration >= cfg.max_iterations;
        if !run.refresh(steps, evaluator, last)? {
            return Ok(run.state);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{build_synthetic, two_arm_loop};
    use crate::geometry::equidistant_weights;
    use crate::learners::EpsilonSchedule;
    use crate::oracle::{exact_ccs, OracleConfig};

    fn loop_cfg(sampling: DynaSampling, dyna_steps: usize) -> LearnerConfig {
        LearnerConfig {
            epsilon: EpsilonSchedule { start: 1.0, end: 0.0, anneal_steps: 1000 },
            steps_per_iteration: 300,
            dyna_steps,
            max_iterations: 12,
            sampling,
            ..LearnerConfig::default()
        }
    }

    fn loop_evaluator(env: &Momdp) -> Evaluator {
        let geometry = GeometryConfig::default();
        let reference = exact_ccs(env, &geometry, &OracleConfig::default()).unwrap();
        Evaluator::new(reference, equidistant_weights(101, 2).unwrap(), geometry).unwrap()
    }

    #[test]
    fn two_arm_loop_learns_both_arms() {
        let env = build_synthetic(&two_arm_loop(0.5)).unwrap();
        let ev = loop_evaluator(&env);
        for sampling in [DynaSampling::Gpi, DynaSampling::Uniform] {
            let state = gpi_pd_run(
                &env,
                &loop_cfg(sampling, 5),
                &BufferConfig::default(),
                &GeometryConfig::default(),
                Some(&ev),
                &mut SimRng::seed(3),
            )
            .unwrap();
            let mut values: Vec<Vec<f64>> = state.library.values().iter().map(|v| v.to_vec()).collect();
            values.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert_eq!(values.len(), 2, "{values:?}");
            assert!((values[0][0]).abs() < 1e-3 && (values[0][1] - 2.0).abs() < 1e-3);
            assert!((values[1][0] - 2.0).abs() < 1e-3 && (values[1][1]).abs() < 1e-3);
            let last = state.trace.last().unwrap();
            assert!(last.mul_grid <= 1e-3 && last.mul_corner <= 1e-3);
        }
    }

    #[test]
    fn runs_repeat_with_the_seed() {
        let env = build_synthetic(&two_arm_loop(0.5)).unwrap();
        let ev = loop_evaluator(&env);
        let run = |sampling, h| {
            gpi_pd_run(
                &env,
                &loop_cfg(sampling, h),
                &BufferConfig::default(),
                &GeometryConfig::default(),
                Some(&ev),
                &mut SimRng::seed(9),
            )
            .unwrap()
        };
        let a = run(DynaSampling::Gpi, 5);
        let b = run(DynaSampling::Gpi, 5);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.library.values(), b.library.values());
        // without planning the sampling scheme is irrelevant
        let c = run(DynaSampling::Gpi, 0);
        let d = run(DynaSampling::Uniform, 0);
        assert_eq!(c.trace, d.trace);
        assert_eq!(c.library.q_tables(), d.library.q_tables());
    }

    #[test]
    fn trace_rows_follow_refreshes() {
        let env = build_synthetic(&two_arm_loop(0.5)).unwrap();
        let ev = loop_evaluator(&env);
        let mut cfg = loop_cfg(DynaSampling::Gpi, 1);
        cfg.max_iterations = 3;
        let state =
            gpi_pd_run(&env, &cfg, &BufferConfig::default(), &GeometryConfig::default(), Some(&ev), &mut SimRng::seed(1))
                .unwrap();
        let steps: Vec<u64> = state.trace.records().iter().map(|r| r.env_steps).collect();
        assert_eq!(steps[0], 0);
        assert!(steps.windows(2).all(|p| p[1] - p[0] == 300));
        assert!(state.trace.len() <= 4);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let env = build_synthetic(&two_arm_loop(0.5)).unwrap();
        let cfg = LearnerConfig { learning_rate: 0.0, ..LearnerConfig::default() };
        let r = gpi_pd_run(&env, &cfg, &BufferConfig::default(), &GeometryConfig::default(), None, &mut SimRng::seed(1));
        assert!(r.is_err());
    }
}
