//! CSV artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back gives the exact values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use zomax_core::solvers::{RunTrace, TraceRecord};

/// Env var naming the output root; defaults to the current directory.
pub const OUTPUT_ROOT_VAR: &str = "ZOMAX_OUT";

/// Shortest round-trip text, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn trace_header(d: usize, write_z: bool) -> Vec<String> {
    let mut h: Vec<String> = ["k", "f_value", "diag_norm", "cum_evals"].iter().map(|s| s.to_string()).collect();
    if write_z {
        h.extend((0..d).map(|i| format!("z_{i}")));
    }
    h
}

fn record_row(r: &TraceRecord, write_z: bool) -> Vec<String> {
    let mut row = vec![
        r.k.to_string(),
        num(r.f_value),
        num(r.diag_norm),
        r.cum_evals.to_string(),
    ];
    if write_z {
        row.extend(r.z.iter().map(num));
    }
    row
}

/// Writes `k,f_value,diag_norm,cum_evals[,z_0..]`. Wall time is left out so
/// that replays are byte-identical.
pub fn write_trace(path: &Path, trace: &RunTrace, write_z: bool) -> Result<()> {
    let d = trace.final_point.dim();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(trace_header(d, write_z))?;
    for r in &trace.records {
        w.write_record(record_row(r, write_z))?;
    }
    w.flush()?;
    Ok(())
}

/// Last `z_i` columns of a trace CSV.
pub fn read_final_point(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    let cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("z_"))
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        bail!("{} has no z_ columns (rerun with write_z = true)", path.display());
    }
    let mut last = None;
    for rec in r.records() {
        last = Some(rec?);
    }
    let rec = last.with_context(|| format!("{} has no rows", path.display()))?;
    cols.iter()
        .map(|&i| {
            rec[i]
                .parse::<f64>()
                .with_context(|| format!("{}: bad value `{}`", path.display(), &rec[i]))
        })
        .collect()
}

/// Writes `<trace>.error` next to a partial trace.
pub fn write_error_marker(trace_path: &Path, message: &str) -> Result<()> {
    let mut p = trace_path.as_os_str().to_owned();
    p.push(".error");
    fs::write(PathBuf::from(p), format!("{message}\n"))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub seed: u64,
    pub final_objective: f64,
    pub final_diag_norm: f64,
    pub iterations: usize,
    pub function_evals: u64,
    pub wall_time_s: f64,
    pub initial_objective: f64,
    /// Held-out accuracy for the poisoning problem.
    pub accuracy: Option<f64>,
}

impl SummaryRow {
    pub fn objective_ratio(&self) -> f64 {
        self.final_objective / self.initial_objective
    }

    fn numeric(&self) -> Vec<f64> {
        let mut v = vec![
            self.final_objective,
            self.final_diag_norm,
            self.iterations as f64,
            self.function_evals as f64,
            self.wall_time_s,
            self.initial_objective,
            self.objective_ratio(),
        ];
        if let Some(a) = self.accuracy {
            v.push(a);
        }
        v
    }
}

const SUMMARY_COLUMNS: [&str; 9] = [
    "experiment",
    "seed",
    "final_objective",
    "final_diag_norm",
    "iterations",
    "function_evals",
    "wall_time_s",
    "initial_objective",
    "objective_ratio",
];

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per seed followed by `mean` and `std` rows over the seeds.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let with_acc = rows.iter().any(|r| r.accuracy.is_some());
    let mut header: Vec<&str> = SUMMARY_COLUMNS.to_vec();
    if with_acc {
        header.push("accuracy");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.experiment.clone(), r.seed.to_string()];
        rec.extend([
            num(r.final_objective),
            num(r.final_diag_norm),
            r.iterations.to_string(),
            r.function_evals.to_string(),
            num(r.wall_time_s),
            num(r.initial_objective),
            num(r.objective_ratio()),
        ]);
        if let Some(a) = r.accuracy {
            rec.push(num(a));
        }
        w.write_record(&rec)?;
    }
    if let Some(first) = rows.first() {
        let cols: Vec<Vec<f64>> = rows.iter().map(SummaryRow::numeric).collect();
        let width = cols[0].len();
        let stats: Vec<(f64, f64)> = (0..width)
            .map(|j| mean_std(&cols.iter().map(|c| c[j]).collect::<Vec<_>>()))
            .collect();
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            let mut rec = vec![first.experiment.clone(), label.to_string()];
            rec.extend(stats.iter().map(|s| num(if pick == 0 { s.0 } else { s.1 })));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
