//! CSV output: one row per run plus an aggregate row per cell.

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::protocol::{Metrics, RunRow, Variant};

pub const RUN_HEADER: [&str; 13] = [
    "dataset", "variant", "noise_pct", "repeat", "seed", "alpha", "beta", "lambda", "hamming", "one_error",
    "coverage", "ranking", "avgprec",
];

/// Mean and sample standard deviation (`n − 1` divisor; NaN below two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub variant: Variant,
    pub noise_pct: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub runs: usize,
    pub failed: usize,
    /// `(mean, std)` per metric, in [`Metrics::NAMES`] order.
    pub metrics: [(f64, f64); 5],
}

impl Summary {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        Metrics::NAMES.iter().position(|&m| m == metric).map(|i| self.metrics[i].0)
    }
}

/// Aggregates rows cell by cell, in order of first appearance.
pub fn summarize(rows: &[RunRow]) -> Vec<Summary> {
    let mut cells: Vec<usize> = Vec::new();
    for r in rows {
        if !cells.contains(&r.cell) {
            cells.push(r.cell);
        }
    }
    cells
        .into_iter()
        .map(|cell| {
            let group: Vec<&RunRow> = rows.iter().filter(|r| r.cell == cell).collect();
            let ok: Vec<Metrics> = group.iter().filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
            let mut metrics = [(f64::NAN, f64::NAN); 5];
            for (i, slot) in metrics.iter_mut().enumerate() {
                let column: Vec<f64> = ok.iter().map(|m| m.values()[i]).collect();
                *slot = mean_std(&column);
            }
            let first = group[0];
            Summary {
                dataset: first.dataset.clone(),
                variant: first.variant,
                noise_pct: first.noise_pct,
                alpha: first.alpha,
                beta: first.beta,
                lambda: first.lambda,
                runs: group.len(),
                failed: group.len() - ok.len(),
                metrics,
            }
        })
        .collect()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn run_record(r: &RunRow) -> Vec<String> {
    let mut rec = vec![
        r.dataset.clone(),
        r.variant.to_string(),
        num(r.noise_pct),
        r.repeat.to_string(),
        r.seed.to_string(),
        num(r.alpha),
        num(r.beta),
        num(r.lambda),
    ];
    let values = match &r.outcome {
        Ok(m) => m.values(),
        Err(_) => [f64::NAN; 5],
    };
    rec.extend(values.iter().map(|&v| num(v)));
    rec
}

pub fn write_runs(path: &Path, rows: &[RunRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RUN_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(run_record(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "dataset", "variant", "joint", "noise_pct", "alpha", "beta", "lambda", "runs", "failed",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for m in Metrics::NAMES {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_std"));
    }
    h
}

pub fn write_summary(path: &Path, summaries: &[Summary]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(summary_header()).map_err(csv_err(path))?;
    for s in summaries {
        let joint = s.variant.joint().map(|j| j.to_string()).unwrap_or_else(|| "na".into());
        let mut rec = vec![
            s.dataset.clone(),
            s.variant.to_string(),
            joint,
            num(s.noise_pct),
            num(s.alpha),
            num(s.beta),
            num(s.lambda),
            s.runs.to_string(),
            s.failed.to_string(),
        ];
        for (mean, std) in s.metrics {
            rec.push(num(mean));
            rec.push(num(std));
        }
        w.write_record(rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// `runs.csv` → `runs.summary.csv`.
pub fn default_summary_path(runs: &Path) -> PathBuf {
    let stem = runs.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    runs.with_file_name(format!("{stem}.summary.csv"))
}
