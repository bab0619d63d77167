use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use morl::compare::{compare_runs, Threshold};
use morl::config::{parse_seeds, Algorithm, EnvSpec, ExperimentConfig};
use morl::experiment::{run_all, write_outputs};
use morl_core::geometry::equidistant_weights;

/// Tabular multi-objective RL experiments.
///
/// Set MORL_LOG (e.g. `info`, `debug`) to control log output.
#[derive(Parser)]
#[command(name = "morl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds, overriding the config.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the exact CCS of an environment and write `ccs.csv`.
    Oracle {
        /// `dst`, `two-arm-loop`, or a map file.
        #[arg(long)]
        env: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        gamma: f64,
    },
    /// Compare two output directories.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
        /// Threshold as a fraction of each run's initial MUL.
        #[arg(long, default_value_t = 0.1, conflicts_with = "absolute")]
        relative: f64,
        /// Absolute MUL threshold.
        #[arg(long)]
        absolute: Option<f64>,
    },
    /// Print an equidistant weight grid as CSV.
    Weights {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MORL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { config, seeds, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.seeds = parse_seeds(&s).map_err(anyhow::Error::msg)?;
            }
            if let Some(out) = out {
                cfg.output = out;
            }
            run_and_write(&cfg)
        }
        Command::Oracle { env, out, gamma } => {
            let mut cfg = ExperimentConfig::new(Algorithm::Oracle);
            cfg.env = EnvSpec::resolve(&env, Path::new("."))?;
            cfg.gamma = gamma;
            cfg.output = out;
            run_and_write(&cfg)
        }
        Command::Compare { baseline, candidate, relative, absolute } => {
            let threshold = absolute.map_or(Threshold::RelativeToInitial(relative), Threshold::Absolute);
            println!("{}", compare_runs(&baseline, &candidate, threshold)?);
            Ok(())
        }
        Command::Weights { m, n } => {
            let grid = equidistant_weights(n, m)?;
            let header: Vec<String> = (1..=m).map(|k| format!("w{k}")).collect();
            println!("{}", header.join(","));
            for w in grid {
                let row: Vec<String> = w.iter().map(f64::to_string).collect();
                println!("{}", row.join(","));
            }
            Ok(())
        }
    }
}

fn run_and_write(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let (evaluator, records) = run_all(cfg)?;
    write_outputs(&cfg.output, cfg, &evaluator, &records)?;
    for r in &records {
        let last = r.trace.last().expect("non-empty trace");
        info!("seed {}: MUL {} with {} policies after {:?}", r.seed, last.mul_corner, last.library_size, r.duration);
    }
    println!(
        "{}: {} run(s), oracle CCS {} vectors, wrote {}",
        cfg.algorithm.name(),
        records.len(),
        evaluator.reference.len(),
        cfg.output.display()
    );
    Ok(())
}
