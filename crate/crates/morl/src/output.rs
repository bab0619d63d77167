//! CSV files written by experiment runs.
//!
//! All files use `,` separators, `.` decimals, LF line endings and a
//! header row. Numbers are printed in Rust's shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use morl_core::geometry::ValueSet;
use morl_core::oracle::{MetricRecord, MetricTrace};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{io_err, HarnessError, Result};

pub const TRACE_HEADER: &str = "iteration,env_steps,eu_grid,mul_grid,mul_corner,library_size";
pub const AGGREGATE_HEADER: &str = "iteration,env_steps,runs,eu_grid_mean,eu_grid_ci95,mul_grid_mean,mul_grid_ci95,mul_corner_mean,mul_corner_ci95";

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed_{seed}.csv")
}

pub fn trace_csv(trace: &MetricTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace.records() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration, r.env_steps, r.eu_grid, r.mul_grid, r.mul_corner, r.library_size
        );
    }
    out
}

/// Value vectors sorted lexicographically, one per row.
pub fn value_set_csv(set: &ValueSet) -> String {
    let dim = set.dim().unwrap_or(0);
    let mut out = String::from("index");
    for k in 1..=dim {
        let _ = write!(out, ",v{k}");
    }
    out.push('\n');
    let mut rows: Vec<&[f64]> = set.vectors.iter().map(|v| v.as_slice()).collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    for (i, row) in rows.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in *row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// One aggregate row: mean and 95% half-width over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub iteration: usize,
    pub env_steps: u64,
    pub runs: usize,
    pub eu_grid: (f64, f64),
    pub mul_grid: (f64, f64),
    pub mul_corner: (f64, f64),
}

/// Mean and Student-t 95% half-width; the half-width is 0 for one sample.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive dof").inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

/// The record in effect at `iteration`: the last one at or before it.
/// Runs that stopped early keep their final metrics.
pub fn record_at(trace: &MetricTrace, iteration: usize) -> Option<&MetricRecord> {
    trace.records().iter().take_while(|r| r.iteration <= iteration).last()
}

/// Per-iteration statistics over `0..=last_iteration`; the `env_steps`
/// column is the nominal budget `iteration · steps_per_iteration`.
pub fn aggregate(traces: &[&MetricTrace], last_iteration: usize, steps_per_iteration: u64) -> Result<Vec<AggregateRow>> {
    if traces.is_empty() {
        return Err(HarnessError::Invalid("no runs to aggregate".into()));
    }
    (0..=last_iteration)
        .map(|it| {
            let recs: Vec<&MetricRecord> = traces
                .iter()
                .map(|t| record_at(t, it).ok_or_else(|| HarnessError::Invalid(format!("trace has no record at iteration {it}"))))
                .collect::<Result<_>>()?;
            let stat = |f: fn(&MetricRecord) -> f64| mean_ci95(&recs.iter().map(|r| f(r)).collect::<Vec<_>>());
            Ok(AggregateRow {
                iteration: it,
                env_steps: it as u64 * steps_per_iteration,
                runs: recs.len(),
                eu_grid: stat(|r| r.eu_grid),
                mul_grid: stat(|r| r.mul_grid),
                mul_corner: stat(|r| r.mul_corner),
            })
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.env_steps,
            r.runs,
            r.eu_grid.0,
            r.eu_grid.1,
            r.mul_grid.0,
            r.mul_grid.1,
            r.mul_corner.0,
            r.mul_corner.1
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|source| HarnessError::Csv { path: path.to_path_buf(), source })
}

fn check_header(path: &Path, r: &mut csv::Reader<std::fs::File>, expected: &str) -> Result<()> {
    let found = r.headers().map_err(|source| HarnessError::Csv { path: path.to_path_buf(), source })?;
    let found: Vec<&str> = found.iter().collect();
    if found.join(",") != expected {
        return Err(HarnessError::Invalid(format!("{}: unexpected header `{}`", path.display(), found.join(","))));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, i: usize) -> Result<T> {
    let line = row.position().map_or(0, |p| p.line() as usize);
    row.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| HarnessError::Parse {
        origin: path.display().to_string(),
        line,
        message: format!("bad value in column {}", i + 1),
    })
}

pub fn read_trace(path: &Path) -> Result<Vec<MetricRecord>> {
    let mut r = reader(path)?;
    check_header(path, &mut r, TRACE_HEADER)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|source| HarnessError::Csv { path: path.to_path_buf(), source })?;
        out.push(MetricRecord {
            iteration: field(path, &row, 0)?,
            env_steps: field(path, &row, 1)?,
            eu_grid: field(path, &row, 2)?,
            mul_grid: field(path, &row, 3)?,
            mul_corner: field(path, &row, 4)?,
            library_size: field(path, &row, 5)?,
        });
    }
    Ok(out)
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = reader(path)?;
    check_header(path, &mut r, AGGREGATE_HEADER)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|source| HarnessError::Csv { path: path.to_path_buf(), source })?;
        let pair = |i| -> Result<(f64, f64)> { Ok((field(path, &row, i)?, field(path, &row, i + 1)?)) };
        out.push(AggregateRow {
            iteration: field(path, &row, 0)?,
            env_steps: field(path, &row, 1)?,
            runs: field(path, &row, 2)?,
            eu_grid: pair(3)?,
            mul_grid: pair(5)?,
            mul_corner: pair(7)?,
        });
    }
    Ok(out)
}
