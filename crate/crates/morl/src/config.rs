//! Flat `key = value` experiment configs.
//!
//! One setting per line; `#` starts a comment. Unknown or repeated keys are
//! errors. Every key except `algorithm` has a default:
//!
//! | key | default |
//! |-----|---------|
//! | `env` | `dst` (the shipped map); `two-arm-loop`, or a map file path |
//! | `gamma` | `0.99` |
//! | `algorithm` | one of `gpi-ls`, `gpi-pd`, `gpi-pd-uniform`, `oracle` |
//! | `learning_rate` | `0.3` |
//! | `epsilon_start`, `epsilon_end`, `epsilon_anneal_steps` | `1`, `0`, `50000` |
//! | `steps_per_iteration` | `1000` |
//! | `dyna_steps` | `5` (`0` for `gpi-ls`, which rejects other values) |
//! | `max_iterations` | `100` |
//! | `epsilon_ccs` | `0` |
//! | `top_k` | `1` |
//! | `done_tolerance` | `1e-6` |
//! | `estimator` | `exact`, or `rollouts` |
//! | `rollout_episodes`, `rollout_horizon` | `5`, `1000` |
//! | `buffer_capacity`, `buffer_alpha`, `buffer_kappa` | `100000`, `0.6`, `0.001` |
//! | `feasibility_tolerance`, `dedup_tolerance` | `1e-9`, `1e-9` |
//! | `vi_tolerance`, `vi_max_sweeps`, `weight_grid_size` | `1e-10`, `200000`, `101` |
//! | `seeds` | `0` (comma-separated list) |
//! | `master_seed` | `0` |
//! | `output` | `results` |
//! | `workers` | number of available cores |
//!
//! Relative paths are resolved against the config file's directory.
//!
//! Run `k` with seed `s` draws from `SimRng::seed(master_seed).split(s)`, so
//! adding or removing seeds never changes the other runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use morl_core::buffer::BufferConfig;
use morl_core::environments::DstMap;
use morl_core::geometry::GeometryConfig;
use morl_core::learners::{DynaSampling, LearnerConfig, ValueEstimator};
use morl_core::oracle::OracleConfig;
use morl_core::SimRng;
use sha2::{Digest, Sha256};

use crate::mapfile::{canonical_map, default_map, load_map};
use crate::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Model-free learner: GPI linear support without planning.
    GpiLs,
    GpiPd,
    /// Dyna planning with uniformly sampled experience.
    GpiPdUniform,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GpiLs => "gpi-ls",
            Algorithm::GpiPd => "gpi-pd",
            Algorithm::GpiPdUniform => "gpi-pd-uniform",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Algorithm::GpiLs, Algorithm::GpiPd, Algorithm::GpiPdUniform, Algorithm::Oracle]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    DeepSeaTreasure,
    TwoArmLoop,
    Map { path: PathBuf, map: DstMap },
}

impl EnvSpec {
    /// `dst`, `two-arm-loop`, or a path to a map file.
    pub fn resolve(spec: &str, base: &Path) -> Result<Self> {
        Ok(match spec {
            "dst" => EnvSpec::DeepSeaTreasure,
            "two-arm-loop" => EnvSpec::TwoArmLoop,
            path => {
                let path = base.join(path);
                let map = load_map(&path)?;
                EnvSpec::Map { path, map }
            }
        })
    }

    fn canonical(&self) -> String {
        match self {
            EnvSpec::DeepSeaTreasure => format!("dst {}", canonical_map(&default_map())),
            EnvSpec::TwoArmLoop => "two-arm-loop".to_string(),
            EnvSpec::Map { map, .. } => format!("map {}", canonical_map(map)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub gamma: f64,
    pub algorithm: Algorithm,
    pub learner: LearnerConfig,
    pub buffer: BufferConfig,
    pub geometry: GeometryConfig,
    pub oracle: OracleConfig,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub output: PathBuf,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for `algorithm` on the shipped map.
    pub fn new(algorithm: Algorithm) -> Self {
        let mut learner = LearnerConfig::default();
        apply_algorithm(&mut learner, algorithm);
        Self {
            env: EnvSpec::DeepSeaTreasure,
            gamma: 0.99,
            algorithm,
            learner,
            buffer: BufferConfig::default(),
            geometry: GeometryConfig::default(),
            oracle: OracleConfig::default(),
            seeds: vec![0],
            master_seed: 0,
            output: PathBuf::from("results"),
            workers: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self> {
        let err = |line: usize, message: String| HarnessError::Parse { origin: origin.to_string(), line, message };
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| err(i + 1, "expected `key = value`".into()))?;
            if !KEYS.contains(&key) {
                return Err(err(i + 1, format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = entries.insert(key, (i + 1, value)) {
                return Err(err(i + 1, format!("`{key}` already set on line {first}")));
            }
        }

        let (algo_line, algo) = entries
            .remove("algorithm")
            .ok_or_else(|| err(text.lines().count().max(1), "missing required key `algorithm`".into()))?;
        let algorithm =
            Algorithm::parse(algo).ok_or_else(|| err(algo_line, format!("unknown algorithm `{algo}`")))?;
        let mut cfg = Self::new(algorithm);
        let mut estimator = "exact";
        let mut estimator_line = 0;
        let (mut episodes, mut horizon) = (5usize, 1000usize);

        for (&key, &(line, value)) in &entries {
            let bad = |what: &str| err(line, format!("`{key}`: expected {what}, found `{value}`"));
            let real = || value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("a number"));
            let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
            let int = || value.parse::<u64>().map_err(|_| bad("a non-negative integer"));
            let l = &mut cfg.learner;
            match key {
                "env" => cfg.env = EnvSpec::resolve(value, base)?,
                "gamma" => cfg.gamma = real()?,
                "learning_rate" => l.learning_rate = real()?,
                "epsilon_start" => l.epsilon.start = real()?,
                "epsilon_end" => l.epsilon.end = real()?,
                "epsilon_anneal_steps" => l.epsilon.anneal_steps = int()?,
                "steps_per_iteration" => l.steps_per_iteration = count()?,
                "dyna_steps" => {
                    l.dyna_steps = count()?;
                    if algorithm == Algorithm::GpiLs && l.dyna_steps != 0 {
                        return Err(err(line, "gpi-ls does no planning; use gpi-pd for dyna_steps > 0".into()));
                    }
                }
                "max_iterations" => l.max_iterations = count()?,
                "epsilon_ccs" => l.epsilon_ccs = real()?,
                "top_k" => l.top_k = count()?,
                "done_tolerance" => l.done_tolerance = real()?,
                "estimator" => {
                    estimator = value;
                    estimator_line = line;
                }
                "rollout_episodes" => episodes = count()?,
                "rollout_horizon" => horizon = count()?,
                "buffer_capacity" => cfg.buffer.capacity = count()?,
                "buffer_alpha" => cfg.buffer.alpha = real()?,
                "buffer_kappa" => cfg.buffer.kappa = real()?,
                "feasibility_tolerance" => cfg.geometry.feasibility_tolerance = real()?,
                "dedup_tolerance" => cfg.geometry.dedup_tolerance = real()?,
                "vi_tolerance" => cfg.oracle.vi_tolerance = real()?,
                "vi_max_sweeps" => cfg.oracle.vi_max_sweeps = count()?,
                "weight_grid_size" => cfg.oracle.weight_grid_size = count()?,
                "seeds" => cfg.seeds = parse_seeds(value).map_err(|m| err(line, m))?,
                "master_seed" => cfg.master_seed = int()?,
                "output" => cfg.output = base.join(value),
                "workers" => match count()? {
                    0 => return Err(bad("a positive integer")),
                    w => cfg.workers = Some(w),
                },
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.learner.estimator = match estimator {
            "exact" => ValueEstimator::Exact(cfg.oracle),
            "rollouts" => ValueEstimator::Rollouts { episodes, horizon, seed: 0 },
            other => return Err(err(estimator_line, format!("unknown estimator `{other}`"))),
        };
        cfg.validate().map_err(|e| HarnessError::Invalid(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Invalid("at least one seed is required".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(HarnessError::Invalid("gamma must lie in (0, 1)".into()));
        }
        self.learner.validate()?;
        self.buffer.validate()?;
        self.geometry.validate()?;
        self.oracle.validate()?;
        Ok(())
    }

    /// Learner settings for one run; rollout estimates are seeded per run.
    pub fn learner_for(&self, seed: u64) -> LearnerConfig {
        let mut l = self.learner.clone();
        match &mut l.estimator {
            ValueEstimator::Exact(cfg) => *cfg = self.oracle,
            ValueEstimator::Rollouts { seed: s, .. } => *s = self.run_rng(seed).split(u64::MAX).next_seed(),
        }
        l
    }

    /// Random stream of the run with `seed`.
    pub fn run_rng(&self, seed: u64) -> SimRng {
        SimRng::seed(self.master_seed).split(seed)
    }

    /// Every semantic setting in a fixed order. Seeds, output directory
    /// and worker count are not part of it.
    pub fn canonical(&self) -> String {
        let l = &self.learner;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("env", self.env.canonical());
        put("gamma", self.gamma.to_string());
        put("algorithm", self.algorithm.name().to_string());
        put("learning_rate", l.learning_rate.to_string());
        put("epsilon_start", l.epsilon.start.to_string());
        put("epsilon_end", l.epsilon.end.to_string());
        put("epsilon_anneal_steps", l.epsilon.anneal_steps.to_string());
        put("steps_per_iteration", l.steps_per_iteration.to_string());
        put("dyna_steps", l.dyna_steps.to_string());
        put("max_iterations", l.max_iterations.to_string());
        put("epsilon_ccs", l.epsilon_ccs.to_string());
        put("top_k", l.top_k.to_string());
        put("done_tolerance", l.done_tolerance.to_string());
        match l.estimator {
            ValueEstimator::Exact(_) => put("estimator", "exact".into()),
            ValueEstimator::Rollouts { episodes, horizon, .. } => {
                put("estimator", "rollouts".into());
                put("rollout_episodes", episodes.to_string());
                put("rollout_horizon", horizon.to_string());
            }
        }
        put("buffer_capacity", self.buffer.capacity.to_string());
        put("buffer_alpha", self.buffer.alpha.to_string());
        put("buffer_kappa", self.buffer.kappa.to_string());
        put("feasibility_tolerance", self.geometry.feasibility_tolerance.to_string());
        put("dedup_tolerance", self.geometry.dedup_tolerance.to_string());
        put("vi_tolerance", self.oracle.vi_tolerance.to_string());
        put("vi_max_sweeps", self.oracle.vi_max_sweeps.to_string());
        put("weight_grid_size", self.oracle.weight_grid_size.to_string());
        put("master_seed", self.master_seed.to_string());
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn apply_algorithm(l: &mut LearnerConfig, algorithm: Algorithm) {
    match algorithm {
        Algorithm::GpiLs => {
            l.dyna_steps = 0;
            l.sampling = DynaSampling::Uniform;
        }
        Algorithm::GpiPd => l.sampling = DynaSampling::Gpi,
        Algorithm::GpiPdUniform => l.sampling = DynaSampling::Uniform,
        Algorithm::Oracle => {}
    }
}

/// Parses a comma-separated seed list.
pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    let seeds: Vec<u64> = s
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("invalid seed `{}`", t.trim())))
        .collect::<std::result::Result<_, _>>()?;
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err("seeds must be distinct".into());
    }
    Ok(seeds)
}

const KEYS: &[&str] = &[
    "env",
    "gamma",
    "algorithm",
    "learning_rate",
    "epsilon_start",
    "epsilon_end",
    "epsilon_anneal_steps",
    "steps_per_iteration",
    "dyna_steps",
    "max_iterations",
    "epsilon_ccs",
    "top_k",
    "done_tolerance",
    "estimator",
    "rollout_episodes",
    "rollout_horizon",
    "buffer_capacity",
    "buffer_alpha",
    "buffer_kappa",
    "feasibility_tolerance",
    "dedup_tolerance",
    "vi_tolerance",
    "vi_max_sweeps",
    "weight_grid_size",
    "seeds",
    "master_seed",
    "output",
    "workers",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::new(Algorithm::GpiPd)
    }
}
