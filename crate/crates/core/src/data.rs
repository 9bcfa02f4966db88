//! Datasets, their text formats, candidate-label noise and train/test splits.
//!
//! Feature files hold one instance per line with whitespace-separated reals.
//! Label files start with `n q` and then carry one line per instance,
//! `i: c1 c2 ...`, listing 0-based label ids (the list may be empty).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2, Axis, Zip};

use crate::error::{PmlError, Result};
use crate::rng::{stream, PortableRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// `n × d`
    pub features: Array2<f64>,
    /// `n × q`, binary
    pub candidates: Array2<f64>,
    /// `n × q`, binary, contained in `candidates`
    pub ground_truth: Option<Array2<f64>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        candidates: Array2<f64>,
        ground_truth: Option<Array2<f64>>,
    ) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            features,
            candidates,
            ground_truth,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn q(&self) -> usize {
        self.candidates.ncols()
    }

    fn validate(&self) -> Result<()> {
        crate::linalg::ensure_finite("features", self.features.view())?;
        if self.candidates.nrows() != self.n() {
            return Err(PmlError::ShapeMismatch {
                op: "dataset",
                left: self.features.dim(),
                right: self.candidates.dim(),
            });
        }
        if let Some(truth) = &self.ground_truth {
            if truth.dim() != self.candidates.dim() {
                return Err(PmlError::ShapeMismatch {
                    op: "dataset ground truth",
                    left: truth.dim(),
                    right: self.candidates.dim(),
                });
            }
            check_contained(truth.view(), self.candidates.view())?;
        }
        Ok(())
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select(Axis(0), indices),
            candidates: self.candidates.select(Axis(0), indices),
            ground_truth: self.ground_truth.as_ref().map(|t| t.select(Axis(0), indices)),
        }
    }

    /// Same dataset with `candidates` replaced.
    pub fn with_candidates(&self, candidates: Array2<f64>) -> Result<Dataset> {
        Dataset::new(
            self.name.clone(),
            self.features.clone(),
            candidates,
            self.ground_truth.clone(),
        )
    }
}

fn check_contained(truth: ArrayView2<f64>, candidates: ArrayView2<f64>) -> Result<()> {
    for ((i, c), &t) in truth.indexed_iter() {
        if t != 0.0 && candidates[[i, c]] == 0.0 {
            return Err(PmlError::Consistency {
                instance: i,
                label: c,
            });
        }
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PmlError + '_ {
    move |source| PmlError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> PmlError {
    PmlError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a whitespace-separated real matrix. Blank lines are ignored.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let start = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("not a number: `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, format!("non-finite value `{tok}`")));
            }
            data.push(v);
        }
        let width = data.len() - start;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(path, lineno, format!("expected {c} values, found {width}")))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(path, 1, "empty matrix file"))?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| parse_err(path, 1, e.to_string()))
}

pub fn format_matrix(m: ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: ArrayView2<f64>) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(io_err(path))
}

/// Reads the sparse `n q` / `i: c1 c2 ...` label format into a binary matrix.
pub fn read_labels(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing `n q` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, hline + 1, "header must be two integers `n q`"))?;
    let [n, q] = dims[..] else {
        return Err(parse_err(path, hline + 1, "header must be two integers `n q`"));
    };
    let mut y = Array2::zeros((n, q));
    let mut seen = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let (head, rest) = line
            .split_once(':')
            .ok_or_else(|| parse_err(path, lineno, "expected `i: labels...`"))?;
        let i: usize = head
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad instance id `{}`", head.trim())))?;
        if i != seen {
            return Err(parse_err(path, lineno, format!("expected instance {seen}, found {i}")));
        }
        for tok in rest.split_whitespace() {
            let c: usize = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad label id `{tok}`")))?;
            if c >= q {
                return Err(parse_err(path, lineno, format!("label {c} out of range 0..{q}")));
            }
            if y[[i, c]] != 0.0 {
                return Err(parse_err(path, lineno, format!("duplicate label {c}")));
            }
            y[[i, c]] = 1.0;
        }
        seen += 1;
        if seen > n {
            return Err(parse_err(path, lineno, format!("more than {n} instances")));
        }
    }
    if seen != n {
        return Err(parse_err(
            path,
            text.lines().count().max(1),
            format!("expected {n} instances, found {seen}"),
        ));
    }
    Ok(y)
}

pub fn format_labels(y: ArrayView2<f64>) -> String {
    let mut out = format!("{} {}\n", y.nrows(), y.ncols());
    for (i, row) in y.rows().into_iter().enumerate() {
        write!(out, "{i}:").unwrap();
        for (c, &v) in row.iter().enumerate() {
            if v != 0.0 {
                write!(out, " {c}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_labels(path: &Path, y: ArrayView2<f64>) -> Result<()> {
    fs::write(path, format_labels(y)).map_err(io_err(path))
}

/// File locations of a dataset on disk.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub features: PathBuf,
    pub labels: PathBuf,
    pub truth: Option<PathBuf>,
}

pub fn load_dataset(paths: &DatasetPaths) -> Result<Dataset> {
    let features = read_matrix(&paths.features)?;
    let candidates = read_labels(&paths.labels)?;
    let truth = paths.truth.as_deref().map(read_labels).transpose()?;
    let name = paths
        .features
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, features, candidates, truth)
}

pub fn save_dataset(ds: &Dataset, paths: &DatasetPaths) -> Result<()> {
    write_matrix(&paths.features, ds.features.view())?;
    write_labels(&paths.labels, ds.candidates.view())?;
    if let (Some(path), Some(truth)) = (&paths.truth, &ds.ground_truth) {
        write_labels(path, truth.view())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Irrelevant labels to add, as a percentage of each instance's true labels.
    pub ratio_percent: f64,
    pub seed: u64,
}

/// Number of noise labels for an instance with `g` true labels out of `q`:
/// `round_half_up(a/100 · g)`, capped at `q − g`.
pub fn noise_count(ratio_percent: f64, g: usize, q: usize) -> usize {
    let k = (ratio_percent * g as f64 / 100.0 + 0.5).floor() as usize;
    k.min(q - g)
}

/// Candidate labels: the truth plus, per instance, uniformly drawn irrelevant labels.
pub fn inject_noise(truth: ArrayView2<f64>, spec: &NoiseSpec) -> Result<Array2<f64>> {
    let q = truth.ncols();
    if q == 0 {
        return Err(PmlError::EmptyLabelSpace);
    }
    if !(spec.ratio_percent >= 0.0) || !spec.ratio_percent.is_finite() {
        return Err(PmlError::invalid(
            "noise ratio",
            format!("must be >= 0, got {}", spec.ratio_percent),
        ));
    }
    let mut rng = PortableRng::new(spec.seed, stream::NOISE);
    let mut out = truth.mapv(|v| if v != 0.0 { 1.0 } else { 0.0 });
    for mut row in out.rows_mut() {
        let pool: Vec<usize> = (0..q).filter(|&c| row[c] == 0.0).collect();
        let g = q - pool.len();
        let k = noise_count(spec.ratio_percent, g, q);
        for c in rng.sample_without_replacement(&pool, k) {
            row[c] = 1.0;
        }
    }
    Ok(out)
}

/// Random instance partition; the train side gets `round(n · train_fraction)` rows.
/// Both sides keep the original row order.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PmlError::invalid(
            "train_fraction",
            format!("must lie in (0, 1), got {train_fraction}"),
        ));
    }
    let n = ds.n();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(PmlError::TooSmall {
            train: n_train,
            test: n.saturating_sub(n_train),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    PortableRng::new(seed, stream::SPLIT).shuffle(&mut order);
    let (train, test) = order.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(train), ds.subset(test)))
}

/// Whether every entry of `a` is 0 or 1.
pub fn is_binary(a: ArrayView2<f64>) -> bool {
    Zip::from(a).all(|&v| v == 0.0 || v == 1.0)
}
