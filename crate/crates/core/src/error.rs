use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PmlError>;

#[derive(Debug, Error)]
pub enum PmlError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    NonConvergence { rows: usize, cols: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("confidence update diverged (entry {value:e} exceeds 1e12); lower lambda or beta")]
    NumericalBlowup { value: f64 },

    #[error("line search stalled after {doublings} increases of the Lipschitz estimate")]
    LineSearchStall { doublings: usize },

    #[error("label space is empty (q = 0)")]
    EmptyLabelSpace,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("instance {instance}: true label {label} is not among its candidates")]
    Consistency { instance: usize, label: usize },

    #[error("split leaves an empty side ({train} train / {test} test)")]
    TooSmall { train: usize, test: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PmlError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        PmlError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
