//! Comparison of two experiment output directories.

use std::fmt;
use std::path::{Path, PathBuf};

use morl_core::oracle::MetricRecord;

use crate::output::{read_aggregate, read_trace};
use crate::{io_err, HarnessError, Result};

/// MUL level a run has to reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Absolute(f64),
    /// A fraction of the run's own initial MUL.
    RelativeToInitial(f64),
}

/// Env steps at which a trace first has corner-augmented MUL at or below
/// the threshold, or `None` if it never does.
pub fn steps_to_threshold(trace: &[MetricRecord], threshold: Threshold) -> Option<u64> {
    let level = match threshold {
        Threshold::Absolute(x) => x,
        Threshold::RelativeToInitial(f) => f * trace.first()?.mul_corner,
    };
    trace.iter().find(|r| r.mul_corner <= level).map(|r| r.env_steps)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationDelta {
    pub iteration: usize,
    pub env_steps: u64,
    pub eu_grid: f64,
    pub mul_grid: f64,
    pub mul_corner: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdStats {
    /// `(seed, steps)`; `None` means never reached.
    pub per_seed: Vec<(u64, Option<u64>)>,
    /// Median over the seeds that reached the threshold.
    pub median: Option<f64>,
}

impl ThresholdStats {
    pub fn reached(&self) -> usize {
        self.per_seed.iter().filter(|(_, s)| s.is_some()).count()
    }

    fn from_dir(dir: &Path, threshold: Threshold) -> Result<Self> {
        let per_seed: Vec<(u64, Option<u64>)> = trace_files(dir)?
            .into_iter()
            .map(|(seed, path)| Ok((seed, steps_to_threshold(&read_trace(&path)?, threshold))))
            .collect::<Result<_>>()?;
        let reached: Vec<f64> = per_seed.iter().filter_map(|(_, s)| s.map(|s| s as f64)).collect();
        Ok(Self { median: median(&reached), per_seed })
    }
}

/// Candidate minus baseline, per iteration, plus steps-to-threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub threshold: Threshold,
    pub deltas: Vec<IterationDelta>,
    pub baseline: ThresholdStats,
    pub candidate: ThresholdStats,
}

impl Comparison {
    /// Candidate median over baseline median; `None` unless both exist.
    pub fn median_ratio(&self) -> Option<f64> {
        Some(self.candidate.median? / self.baseline.median?)
    }
}

/// `(seed, path)` of every `trace_seed_<s>.csv`, sorted by seed.
pub fn trace_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let seed = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("trace_seed_"))
            .and_then(|n| n.strip_suffix(".csv"))
            .and_then(|n| n.parse::<u64>().ok());
        if let Some(seed) = seed {
            out.push((seed, path));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(HarnessError::Invalid(format!("{}: no trace files", dir.display())));
    }
    Ok(out)
}

pub fn compare_runs(baseline: &Path, candidate: &Path, threshold: Threshold) -> Result<Comparison> {
    let a = read_aggregate(&baseline.join("aggregate.csv"))?;
    let b = read_aggregate(&candidate.join("aggregate.csv"))?;
    let grid = |rows: &[crate::output::AggregateRow]| rows.iter().map(|r| (r.iteration, r.env_steps)).collect::<Vec<_>>();
    if grid(&a) != grid(&b) {
        return Err(HarnessError::Invalid(format!(
            "iteration grids differ: {} has {} rows, {} has {}",
            baseline.display(),
            a.len(),
            candidate.display(),
            b.len()
        )));
    }
    let deltas = a
        .iter()
        .zip(&b)
        .map(|(x, y)| IterationDelta {
            iteration: x.iteration,
            env_steps: x.env_steps,
            eu_grid: y.eu_grid.0 - x.eu_grid.0,
            mul_grid: y.mul_grid.0 - x.mul_grid.0,
            mul_corner: y.mul_corner.0 - x.mul_corner.0,
        })
        .collect();
    Ok(Comparison {
        threshold,
        deltas,
        baseline: ThresholdStats::from_dir(baseline, threshold)?,
        candidate: ThresholdStats::from_dir(candidate, threshold)?,
    })
}

fn fmt_steps(s: Option<u64>) -> String {
    s.map_or_else(|| "not reached".to_string(), |s| s.to_string())
}

fn fmt_median(m: Option<f64>) -> String {
    m.map_or_else(|| "not reached".to_string(), |m| m.to_string())
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "iteration,env_steps,delta_eu_grid,delta_mul_grid,delta_mul_corner")?;
        for d in &self.deltas {
            writeln!(f, "{},{},{},{},{}", d.iteration, d.env_steps, d.eu_grid, d.mul_grid, d.mul_corner)?;
        }
        match self.threshold {
            Threshold::Absolute(x) => writeln!(f, "\nsteps to MUL <= {x}")?,
            Threshold::RelativeToInitial(x) => writeln!(f, "\nsteps to MUL <= {x} x initial MUL")?,
        }
        for (name, stats) in [("baseline", &self.baseline), ("candidate", &self.candidate)] {
            let seeds: Vec<String> = stats.per_seed.iter().map(|(s, v)| format!("{s}:{}", fmt_steps(*v))).collect();
            writeln!(
                f,
                "{name}: median {} ({}/{} reached) [{}]",
                fmt_median(stats.median),
                stats.reached(),
                stats.per_seed.len(),
                seeds.join(" ")
            )?;
        }
        write!(f, "median ratio (candidate / baseline): {}", fmt_median(self.median_ratio()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::{aggregate, aggregate_csv, trace_csv, trace_file_name, write_file};
    use morl_core::oracle::MetricTrace;

    fn trace(muls: &[f64]) -> MetricTrace {
        let mut t = MetricTrace::new();
        for (i, &m) in muls.iter().enumerate() {
            t.push(MetricRecord {
                iteration: i,
                env_steps: 1000 * i as u64,
                eu_grid: -m,
                mul_grid: m,
                mul_corner: m,
                library_size: 1,
            })
            .unwrap();
        }
        t
    }

    fn write_dir(dir: &Path, traces: &[(u64, MetricTrace)]) {
        for (seed, t) in traces {
            write_file(&dir.join(trace_file_name(*seed)), &trace_csv(t)).unwrap();
        }
        let refs: Vec<&MetricTrace> = traces.iter().map(|(_, t)| t).collect();
        let last = refs[0].len() - 1;
        write_file(&dir.join("aggregate.csv"), &aggregate_csv(&aggregate(&refs, last, 1000).unwrap())).unwrap();
    }

    #[test]
    fn threshold_crossings() {
        let t = trace(&[1.0, 0.5, 0.1, 0.05]);
        assert_eq!(steps_to_threshold(t.records(), Threshold::Absolute(0.1)), Some(2000));
        assert_eq!(steps_to_threshold(t.records(), Threshold::RelativeToInitial(0.05)), Some(3000));
        assert_eq!(steps_to_threshold(t.records(), Threshold::Absolute(0.01)), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn identical_dirs_have_zero_deltas() {
        let dir = tempfile::tempdir().unwrap();
        write_dir(dir.path(), &[(1, trace(&[1.0, 0.2, 0.0])), (2, trace(&[1.0, 0.5, 0.1]))]);
        let c = compare_runs(dir.path(), dir.path(), Threshold::Absolute(0.1)).unwrap();
        assert!(c.deltas.iter().all(|d| d.eu_grid == 0.0 && d.mul_grid == 0.0 && d.mul_corner == 0.0));
        assert_eq!(c.median_ratio(), Some(1.0));
    }

    #[test]
    fn faster_candidate_halves_the_median() {
        let base = tempfile::tempdir().unwrap();
        let cand = tempfile::tempdir().unwrap();
        write_dir(base.path(), &[(1, trace(&[1.0, 0.5, 0.3, 0.2, 0.1]))]);
        write_dir(cand.path(), &[(1, trace(&[1.0, 0.5, 0.1, 0.1, 0.1])), (2, trace(&[1.0, 1.0, 1.0, 1.0, 1.0]))]);
        let c = compare_runs(base.path(), cand.path(), Threshold::Absolute(0.1)).unwrap();
        assert_eq!(c.baseline.median, Some(4000.0));
        assert_eq!(c.candidate.median, Some(2000.0));
        assert_eq!(c.candidate.per_seed[1], (2, None));
        assert_eq!(c.median_ratio(), Some(0.5));
        assert!(c.to_string().contains("2:not reached"));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let base = tempfile::tempdir().unwrap();
        let cand = tempfile::tempdir().unwrap();
        write_dir(base.path(), &[(1, trace(&[1.0, 0.5]))]);
        write_dir(cand.path(), &[(1, trace(&[1.0, 0.5, 0.1]))]);
        assert!(compare_runs(base.path(), cand.path(), Threshold::Absolute(0.1)).is_err());
    }
}
