//! Partial multi-label learning with a low-rank predictor and jointly
//! estimated label confidences.
//!
//! Training data carries candidate label sets that contain every true label
//! plus irrelevant ones. The model alternates between
//!
//! * a low-rank linear predictor `W`, fit to the current confidences by
//!   nuclear-norm regularized least squares ([`predictor`]), and
//! * a nonnegative confidence matrix `P` whose inner products `p_iᵀp_j` are
//!   pulled toward the product of feature and candidate-label similarity
//!   ([`similarity`], [`confidence`]).
//!
//! [`trainer::fit`] runs the alternation; [`metrics`] holds the evaluation
//! measures and [`data`] the file formats, noise injection and splits.

pub mod confidence;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod predictor;
pub mod rng;
pub mod similarity;
pub mod synthetic;
pub mod trainer;

pub use error::{PmlError, Result};
pub use trainer::{fit, TrainConfig, TrainedModel};
