//! Seeded batch runs.

use std::path::Path;
use std::time::{Duration, Instant};

use log::{debug, info};
use morl_core::buffer::BufferConfig;
use morl_core::environments::{build_dst, build_synthetic, two_arm_loop};
use morl_core::geometry::{equidistant_weights, ValueSet};
use morl_core::learners::gpi_pd_run;
use morl_core::oracle::{exact_ccs, Evaluator, MetricTrace};
use morl_core::Momdp;
use rayon::prelude::*;

use crate::config::{Algorithm, EnvSpec, ExperimentConfig};
use crate::mapfile::default_map;
use crate::output::{aggregate, aggregate_csv, trace_csv, trace_file_name, value_set_csv, write_file};
use crate::{io_err, HarnessError, Result};

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub trace: MetricTrace,
    pub final_set: ValueSet,
    pub duration: Duration,
}

pub fn build_env(spec: &EnvSpec, gamma: f64) -> Result<Momdp> {
    Ok(match spec {
        EnvSpec::DeepSeaTreasure => build_dst(&default_map(), gamma)?.momdp,
        EnvSpec::TwoArmLoop => build_synthetic(&two_arm_loop(gamma))?,
        EnvSpec::Map { map, .. } => build_dst(map, gamma)?.momdp,
    })
}

/// Metrics against the oracle CCS on the configured equidistant grid.
pub fn build_evaluator(cfg: &ExperimentConfig, env: &Momdp) -> Result<Evaluator> {
    let reference = exact_ccs(env, &cfg.geometry, &cfg.oracle)?;
    let grid = equidistant_weights(cfg.oracle.weight_grid_size, env.objective_count())?;
    Ok(Evaluator::new(reference, grid, cfg.geometry)?)
}

/// One seeded run. Deterministic in `(cfg, seed)`.
pub fn run_seed(cfg: &ExperimentConfig, env: &Momdp, evaluator: &Evaluator, seed: u64) -> Result<RunRecord> {
    let started = Instant::now();
    let wrap = |source| HarnessError::Run { seed, source };
    let (trace, final_set) = match cfg.algorithm {
        Algorithm::Oracle => {
            // the evaluator's reference already is the oracle CCS
            let set = evaluator.reference.clone();
            let mut trace = MetricTrace::new();
            trace.push(evaluator.record(0, 0, &set).map_err(wrap)?).map_err(wrap)?;
            (trace, set)
        }
        _ => {
            let mut rng = cfg.run_rng(seed);
            let learner = cfg.learner_for(seed);
            let buffer: BufferConfig = cfg.buffer;
            let state = gpi_pd_run(env, &learner, &buffer, &cfg.geometry, Some(evaluator), &mut rng).map_err(wrap)?;
            (state.trace, state.library.value_set())
        }
    };
    let duration = started.elapsed();
    debug!("seed {seed}: {} trace rows in {duration:?}", trace.len());
    Ok(RunRecord { config_hash: cfg.hash(), seed, trace, final_set, duration })
}

/// Runs every seed (in parallel when `workers` allows) and returns the
/// records in seed-list order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<(Evaluator, Vec<RunRecord>)> {
    cfg.validate()?;
    let env = build_env(&cfg.env, cfg.gamma)?;
    let evaluator = build_evaluator(cfg, &env)?;
    info!(
        "{} on {} seed(s); oracle CCS has {} vectors",
        cfg.algorithm.name(),
        cfg.seeds.len(),
        evaluator.reference.len()
    );
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| HarnessError::Invalid(format!("worker pool: {e}")))?;
    let records = pool.install(|| {
        cfg.seeds.par_iter().map(|&seed| run_seed(cfg, &env, &evaluator, seed)).collect::<Result<Vec<_>>>()
    })?;
    Ok((evaluator, records))
}

/// Runs the experiment and writes its files into `cfg.output`:
/// `ccs.csv` (oracle CCS), `trace_seed_<s>.csv` and `final_seed_<s>.csv`
/// per seed, `aggregate.csv`, `runs.csv` and `config.txt`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let (evaluator, records) = run_all(cfg)?;
    write_outputs(&cfg.output, cfg, &evaluator, &records)?;
    Ok(records)
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, evaluator: &Evaluator, records: &[RunRecord]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("ccs.csv"), &value_set_csv(&evaluator.reference))?;
    for r in records {
        write_file(&dir.join(trace_file_name(r.seed)), &trace_csv(&r.trace))?;
        write_file(&dir.join(format!("final_seed_{}.csv", r.seed)), &value_set_csv(&r.final_set))?;
    }
    let (last, steps) = match cfg.algorithm {
        Algorithm::Oracle => (0, 0),
        _ => (cfg.learner.max_iterations, cfg.learner.steps_per_iteration as u64),
    };
    let traces: Vec<&MetricTrace> = records.iter().map(|r| &r.trace).collect();
    write_file(&dir.join("aggregate.csv"), &aggregate_csv(&aggregate(&traces, last, steps)?))?;

    let mut runs = String::from("seed,config_hash,iterations,env_steps,library_size,mul_corner,duration_ms\n");
    for r in records {
        let last = r.trace.last().expect("every run records its start");
        runs.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.seed,
            r.config_hash,
            last.iteration,
            last.env_steps,
            last.library_size,
            last.mul_corner,
            r.duration.as_millis()
        ));
    }
    write_file(&dir.join("runs.csv"), &runs)?;
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    write_file(
        &dir.join("config.txt"),
        &format!("# hash {}\n{}seeds={}\n", cfg.hash(), cfg.canonical(), seeds.join(",")),
    )?;
    Ok(())
}
