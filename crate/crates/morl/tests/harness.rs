use std::fs;
use std::path::Path;

use morl::config::{Algorithm, EnvSpec, ExperimentConfig};
use morl::experiment::run_experiment;
use morl::output::{read_aggregate, read_trace, TRACE_HEADER};

fn golden_config(out: &Path) -> ExperimentConfig {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut cfg = ExperimentConfig::load(&dir.join("two_arm.cfg")).unwrap();
    cfg.output = out.to_path_buf();
    cfg
}

#[test]
fn trace_schema_matches_golden_file() {
    let out = tempfile::tempdir().unwrap();
    run_experiment(&golden_config(out.path())).unwrap();
    let produced = fs::read_to_string(out.path().join("trace_seed_3.csv")).unwrap();
    let golden = include_str!("golden/two_arm_trace_seed_3.csv");
    assert_eq!(produced.lines().next(), Some(TRACE_HEADER));
    assert_eq!(TRACE_HEADER, "iteration,env_steps,eu_grid,mul_grid,mul_corner,library_size");
    assert_eq!(produced, golden);
    assert!(!produced.contains('\r'));
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = golden_config(a.path());
    cfg.seeds = vec![1, 2];
    cfg.workers = Some(2);
    run_experiment(&cfg).unwrap();
    cfg.output = b.path().to_path_buf();
    cfg.workers = Some(1);
    run_experiment(&cfg).unwrap();
    for name in ["trace_seed_1.csv", "trace_seed_2.csv", "final_seed_1.csv", "aggregate.csv", "ccs.csv", "config.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn adding_seeds_leaves_existing_runs_alone() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = golden_config(a.path());
    run_experiment(&cfg).unwrap();
    cfg.output = b.path().to_path_buf();
    cfg.seeds = vec![9, 3, 4];
    run_experiment(&cfg).unwrap();
    let name = "trace_seed_3.csv";
    assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
}

#[test]
fn ten_seeds_give_ten_traces_and_an_aggregate() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = golden_config(out.path());
    cfg.seeds = (1..=10).collect();
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), 10);
    for seed in 1..=10 {
        let trace = read_trace(&out.path().join(format!("trace_seed_{seed}.csv"))).unwrap();
        assert_eq!(trace.first().unwrap().env_steps, 0);
    }
    let rows = read_aggregate(&out.path().join("aggregate.csv")).unwrap();
    assert_eq!(rows.len(), cfg.learner.max_iterations + 1);
    assert!(rows.iter().all(|r| r.runs == 10));
    assert_eq!(rows[2].env_steps, 100);
    let runs = fs::read_to_string(out.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 11);
}

#[test]
fn oracle_run_on_the_default_map() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Algorithm::Oracle);
    cfg.output = out.path().to_path_buf();
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records[0].final_set.len(), 10);
    let ccs = fs::read_to_string(out.path().join("ccs.csv")).unwrap();
    assert_eq!(ccs.lines().count(), 11);
    assert_eq!(records[0].trace.last().unwrap().mul_corner, 0.0);
}

#[test]
fn learned_dst_ccs_is_exact_with_enough_budget() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Algorithm::GpiPd);
    cfg.env = EnvSpec::DeepSeaTreasure;
    cfg.learner.steps_per_iteration = 1000;
    cfg.learner.max_iterations = 150;
    cfg.learner.epsilon.anneal_steps = 100_000;
    cfg.seeds = vec![1];
    cfg.output = out.path().to_path_buf();
    let records = run_experiment(&cfg).unwrap();
    let last = records[0].trace.last().unwrap();
    assert!(last.mul_corner <= 1e-9, "final MUL {}", last.mul_corner);
    assert_eq!(last.library_size, 10);
}
