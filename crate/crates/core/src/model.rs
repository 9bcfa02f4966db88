//! Plain-text model container.
//!
//! ```text
//! pml-lfc-model 1
//! dims <d> <q>
//! converged <true|false>
//! config <count>
//! <key> = <value>          (count lines)
//! trace <count>
//! <objective value>        (count lines)
//! weights
//! <q values>               (d lines, row-major)
//! ```
//!
//! Reals use Rust's shortest round-trip formatting, so a save/load cycle is
//! lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{PmlError, Result};
use crate::predictor::WeightMatrix;
use crate::trainer::{TrainConfig, TrainedModel};

const MAGIC: &str = "pml-lfc-model 1";

pub fn format_model(model: &TrainedModel) -> String {
    let w = &model.weights.values;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "dims {} {}", w.nrows(), w.ncols()).unwrap();
    writeln!(out, "converged {}", model.converged).unwrap();
    let entries = model.config.entries();
    writeln!(out, "config {}", entries.len()).unwrap();
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").unwrap();
    }
    writeln!(out, "trace {}", model.objective_trace.len()).unwrap();
    for v in &model.objective_trace {
        writeln!(out, "{v:?}").unwrap();
    }
    writeln!(out, "weights").unwrap();
    out.push_str(&crate::data::format_matrix(w.view()));
    out
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    fs::write(path, format_model(model)).map_err(|source| PmlError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> PmlError {
        PmlError::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => Ok((i + 1, l)),
            None => Err(self.err(0, format!("unexpected end of file, expected {what}"))),
        }
    }

    /// Reads `<keyword> <fields...>` and returns the fields.
    fn keyword(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        let (no, line) = self.next(keyword)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.err(no, format!("expected `{keyword}`")));
        }
        Ok((no, parts.collect()))
    }

    fn number<T: std::str::FromStr>(&self, no: usize, tok: Option<&&str>) -> Result<T> {
        tok.and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err(no, "expected a number"))
    }
}

pub fn parse_model(text: &str, path: &Path) -> Result<TrainedModel> {
    let mut lines = Lines {
        path,
        inner: text.lines().enumerate(),
    };
    let (no, magic) = lines.next("header")?;
    if magic.trim() != MAGIC {
        return Err(lines.err(no, format!("expected `{MAGIC}`")));
    }
    let (no, dims) = lines.keyword("dims")?;
    let d: usize = lines.number(no, dims.first())?;
    let q: usize = lines.number(no, dims.get(1))?;

    let (no, conv) = lines.keyword("converged")?;
    let converged = match conv.first() {
        Some(&"true") => true,
        Some(&"false") => false,
        _ => return Err(lines.err(no, "expected `true` or `false`")),
    };

    let (no, count) = lines.keyword("config")?;
    let count: usize = lines.number(no, count.first())?;
    let mut config = TrainConfig::default();
    for _ in 0..count {
        let (no, line) = lines.next("config entry")?;
        config
            .apply_text(line)
            .map_err(|e| lines.err(no, e.to_string()))?;
    }

    let (no, count) = lines.keyword("trace")?;
    let count: usize = lines.number(no, count.first())?;
    let mut trace = Vec::with_capacity(count);
    for _ in 0..count {
        let (no, line) = lines.next("trace value")?;
        trace.push(lines.number(no, Some(&line.trim()))?);
    }

    lines.keyword("weights")?;
    let mut values = Array2::zeros((d, q));
    for i in 0..d {
        let (no, line) = lines.next("weight row")?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| lines.err(no, "bad weight value"))?;
        if row.len() != q {
            return Err(lines.err(no, format!("expected {q} weights, found {}", row.len())));
        }
        for (c, v) in row.into_iter().enumerate() {
            values[[i, c]] = v;
        }
    }

    Ok(TrainedModel {
        weights: WeightMatrix { values },
        confidence: None,
        objective_trace: trace,
        converged,
        config,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|source| PmlError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text, path)
}
