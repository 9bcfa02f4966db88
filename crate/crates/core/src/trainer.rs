//! Alternating optimization of the predictor `W` and the confidences `P`.

use std::fmt;

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

use crate::confidence::{init_confidence, phi_objective, update_confidence, ConfidenceMatrix, PUpdateParams};
use crate::error::{PmlError, Result};
use crate::linalg::{ensure_finite, nuclear_norm};
use crate::predictor::{agd_solve, f_smooth, predict_scores, AgdParams, WeightMatrix};
use crate::similarity::{build_bundle, KernelWidthMode, SimilarityBundle, SimilarityMode};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Weight of the row-sum penalty in the P-step.
    pub lambda: f64,
    pub outer_iterations: usize,
    /// Relative change of the full objective that counts as converged.
    pub outer_tolerance: f64,
    pub similarity_mode: SimilarityMode,
    /// `false` selects the two-stage variant: P first, then W.
    pub joint: bool,
    pub kernel_width_mode: KernelWidthMode,
    /// Solver settings; `alpha` here is overridden by `TrainConfig::alpha`.
    pub agd: AgdParams,
    /// P-step settings; `beta` and `lambda` are overridden by the fields above.
    pub p_update: PUpdateParams,
    /// Echoed into reports. Training itself is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 10.0,
            beta: 10.0,
            lambda: 1.0,
            outer_iterations: 10,
            outer_tolerance: 1e-5,
            similarity_mode: SimilarityMode::Both,
            joint: true,
            kernel_width_mode: KernelWidthMode::MeanPairwise,
            agd: AgdParams::default(),
            p_update: PUpdateParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for config key `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
}

/// Every key accepted by [`TrainConfig::set`], in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "alpha",
    "beta",
    "lambda",
    "outer_iterations",
    "outer_tolerance",
    "similarity_mode",
    "joint",
    "kernel_width_mode",
    "agd.l0",
    "agd.gamma",
    "agd.max_iterations",
    "agd.tolerance",
    "p_update.inner_iterations",
    "p_update.tolerance",
    "seed",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl TrainConfig {
    /// Sets one field by its flat key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "alpha" => self.alpha = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "outer_iterations" => self.outer_iterations = parse_value(key, value)?,
            "outer_tolerance" => self.outer_tolerance = parse_value(key, value)?,
            "similarity_mode" => self.similarity_mode = parse_value(key, value)?,
            "joint" => self.joint = parse_value(key, value)?,
            "kernel_width_mode" => self.kernel_width_mode = parse_value(key, value)?,
            "agd.l0" => self.agd.l0 = parse_value(key, value)?,
            "agd.gamma" => self.agd.gamma = parse_value(key, value)?,
            "agd.max_iterations" => self.agd.max_iterations = parse_value(key, value)?,
            "agd.tolerance" => self.agd.tolerance = parse_value(key, value)?,
            "p_update.inner_iterations" => self.p_update.inner_iterations = parse_value(key, value)?,
            "p_update.tolerance" => self.p_update.tolerance = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// `(key, value)` pairs for every field; values round-trip through [`set`](Self::set).
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        CONFIG_KEYS
            .iter()
            .map(|&k| {
                let v = match k {
                    "alpha" => format!("{:?}", self.alpha),
                    "beta" => format!("{:?}", self.beta),
                    "lambda" => format!("{:?}", self.lambda),
                    "outer_iterations" => self.outer_iterations.to_string(),
                    "outer_tolerance" => format!("{:?}", self.outer_tolerance),
                    "similarity_mode" => self.similarity_mode.to_string(),
                    "joint" => self.joint.to_string(),
                    "kernel_width_mode" => self.kernel_width_mode.to_string(),
                    "agd.l0" => format!("{:?}", self.agd.l0),
                    "agd.gamma" => format!("{:?}", self.agd.gamma),
                    "agd.max_iterations" => self.agd.max_iterations.to_string(),
                    "agd.tolerance" => format!("{:?}", self.agd.tolerance),
                    "p_update.inner_iterations" => self.p_update.inner_iterations.to_string(),
                    "p_update.tolerance" => format!("{:?}", self.p_update.tolerance),
                    "seed" => self.seed.to_string(),
                    _ => unreachable!("CONFIG_KEYS and entries() out of sync"),
                };
                (k, v)
            })
            .collect()
    }

    /// Parses flat `key = value` text on top of the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut cfg = TrainConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn agd_params(&self) -> AgdParams {
        AgdParams {
            alpha: self.alpha,
            ..self.agd
        }
    }

    pub fn p_update_params(&self) -> PUpdateParams {
        PUpdateParams {
            beta: self.beta,
            lambda: self.lambda,
            ..self.p_update
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0 {
            return Err(PmlError::invalid("outer_iterations", "must be >= 1"));
        }
        if !(self.outer_tolerance >= 0.0) {
            return Err(PmlError::invalid("outer_tolerance", "must be >= 0"));
        }
        self.agd_params().validate()?;
        self.p_update_params().validate()
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub weights: WeightMatrix,
    /// Present right after training; not persisted with the model.
    pub confidence: Option<ConfidenceMatrix>,
    /// Full objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub config: TrainConfig,
}

impl TrainedModel {
    pub fn predict(&self, x_test: ArrayView2<f64>, threshold: f64) -> Result<Prediction> {
        predict(&self.weights, x_test, threshold)
    }
}

/// `‖XW − P‖² + α‖W‖_* + β‖H ⊙ (A − PPᵀ)‖²`
pub fn full_objective(
    w: ArrayView2<f64>,
    p: ArrayView2<f64>,
    x: ArrayView2<f64>,
    bundle: &SimilarityBundle,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let reg = if alpha == 0.0 { 0.0 } else { alpha * nuclear_norm(w)? };
    Ok(f_smooth(w, x, p) + reg + beta * phi_objective(p, bundle))
}

fn relative_change(previous: f64, current: f64) -> f64 {
    (previous - current).abs() / previous.abs().max(f64::MIN_POSITIVE)
}

fn check_inputs(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(PmlError::ShapeMismatch {
            op: "fit",
            left: x.dim(),
            right: y.dim(),
        });
    }
    if y.ncols() == 0 {
        return Err(PmlError::EmptyLabelSpace);
    }
    if x.nrows() < 2 {
        return Err(PmlError::invalid("x", format!("need at least 2 instances, got {}", x.nrows())));
    }
    if x.ncols() == 0 {
        return Err(PmlError::invalid("x", "need at least one feature"));
    }
    ensure_finite("features", x)
}

/// Fits the model on features `x` (`n × d`) and candidate labels `y` (`n × q`).
pub fn fit(x: ArrayView2<f64>, y: ArrayView2<f64>, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    check_inputs(x, y)?;
    let bundle = build_bundle(x, y, config.kernel_width_mode)?.with_mode(config.similarity_mode);
    let p0 = init_confidence(y)?;
    if config.joint {
        fit_joint(x, &bundle, p0, config)
    } else {
        fit_two_stage(x, &bundle, p0, config)
    }
}

fn fit_joint(
    x: ArrayView2<f64>,
    bundle: &SimilarityBundle,
    mut p: ConfidenceMatrix,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    let agd = config.agd_params();
    let p_params = config.p_update_params();
    let (alpha, beta) = (config.alpha, config.beta);

    let mut w = WeightMatrix::zeros(x.ncols(), p.q());
    let mut previous = full_objective(w.values.view(), p.values.view(), x, bundle, alpha, beta)?;
    let mut trace = Vec::with_capacity(config.outer_iterations);
    let mut converged = false;

    for _ in 0..config.outer_iterations {
        w = agd_solve(x, p.values.view(), &agd, Some(&w))?.weights;
        let xw = x.dot(&w.values);
        p = update_confidence(&p, xw.view(), bundle, &p_params)?;
        let value = full_objective(w.values.view(), p.values.view(), x, bundle, alpha, beta)?;
        trace.push(value);
        let change = relative_change(previous, value);
        previous = value;
        if change < config.outer_tolerance {
            converged = true;
            break;
        }
    }

    Ok(TrainedModel {
        weights: w,
        confidence: Some(p),
        objective_trace: trace,
        converged,
        config: config.clone(),
    })
}

/// P is driven to convergence against the unregularized least-squares fit
/// of the initial confidences, then W is fit once against the final P.
fn fit_two_stage(
    x: ArrayView2<f64>,
    bundle: &SimilarityBundle,
    p0: ConfidenceMatrix,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    let (alpha, beta) = (config.alpha, config.beta);
    let least_squares = AgdParams {
        alpha: 0.0,
        ..config.agd
    };
    let w_ls = agd_solve(x, p0.values.view(), &least_squares, None)?.weights;
    let xw = x.dot(&w_ls.values);

    // Same P-step budget as the joint alternation.
    let p_params = PUpdateParams {
        inner_iterations: config.outer_iterations * config.p_update.inner_iterations,
        ..config.p_update_params()
    };
    let p = update_confidence(&p0, xw.view(), bundle, &p_params)?;
    let staged = full_objective(w_ls.values.view(), p.values.view(), x, bundle, alpha, beta)?;

    let w = agd_solve(x, p.values.view(), &config.agd_params(), Some(&w_ls))?.weights;
    let value = full_objective(w.values.view(), p.values.view(), x, bundle, alpha, beta)?;

    Ok(TrainedModel {
        weights: w,
        confidence: Some(p),
        objective_trace: vec![staged, value],
        converged: true,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Array2<f64>,
    /// `1` where the score reaches the threshold.
    pub labels: Array2<f64>,
}

/// Scores `X_test · W` and their binarization at `threshold`.
pub fn predict(w: &WeightMatrix, x_test: ArrayView2<f64>, threshold: f64) -> Result<Prediction> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(PmlError::invalid(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    let scores = predict_scores(w, x_test)?;
    let labels = binarize(scores.view(), threshold);
    Ok(Prediction { scores, labels })
}

pub fn binarize(scores: ArrayView2<f64>, threshold: f64) -> Array2<f64> {
    scores.mapv(|s| if s >= threshold { 1.0 } else { 0.0 })
}

/// Default binarization threshold `1/q`.
pub fn default_threshold(q: usize) -> f64 {
    1.0 / q.max(2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::one_error;
    use ndarray::array;

    fn toy() -> (Array2<f64>, Array2<f64>) {
        let x = array![
            [1.0, 0.1],
            [0.9, -0.1],
            [1.1, 0.0],
            [0.1, 1.0],
            [-0.1, 0.9],
            [0.0, 1.2]
        ];
        let y = array![
            [1.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 1.0],
            [0.0, 1.0]
        ];
        (x, y)
    }

    #[test]
    fn config_keys_round_trip() {
        let mut cfg = TrainConfig::default();
        cfg.set("alpha", "0.5").unwrap();
        cfg.set("similarity_mode", "label_only").unwrap();
        cfg.set("joint", "false").unwrap();
        cfg.set("agd.gamma", "3").unwrap();
        cfg.set("p_update.inner_iterations", "4").unwrap();
        cfg.set("kernel_width_mode", "pair-sum").unwrap();
        let back = TrainConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.entries().len(), CONFIG_KEYS.len());
    }

    #[test]
    fn config_errors_name_the_key() {
        let err = TrainConfig::from_text("alpah = 3\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("alpah".into()));
        assert!(err.to_string().contains("alpah"));
        let err = TrainConfig::from_text("beta = ten").unwrap_err();
        assert!(err.to_string().contains("beta"));
        assert!(matches!(
            TrainConfig::from_text("# ok\nalpha 3"),
            Err(ConfigError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn full_objective_terms() {
        let (x, y) = toy();
        let bundle = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
        // exact fit with no regularization
        let w = Array2::<f64>::zeros((2, 2));
        let p = x.dot(&w);
        assert_eq!(full_objective(w.view(), p.view(), x.view(), &bundle, 0.0, 0.0).unwrap(), 0.0);
        // zero W and zero P leave only the masked target
        let zero_p = Array2::<f64>::zeros((6, 2));
        let masked: f64 = (&bundle.mask * &bundle.joint_target).iter().map(|v| v * v).sum();
        let got = full_objective(w.view(), zero_p.view(), x.view(), &bundle, 3.0, 2.0).unwrap();
        assert!((got - 2.0 * masked).abs() < 1e-12);
    }

    #[test]
    fn one_hot_candidates_are_kept_and_fit() {
        let (x, y) = toy();
        let cfg = TrainConfig {
            alpha: 0.1,
            ..TrainConfig::default()
        };
        let model = fit(x.view(), y.view(), &cfg).unwrap();
        let p = model.confidence.as_ref().unwrap();
        assert!(p.respects_support());
        let pred = model.predict(x.view(), 0.5).unwrap();
        assert_eq!(one_error(pred.scores.view(), y.view()).unwrap().value, 0.0);
    }

    #[test]
    fn single_outer_iteration_unrolls() {
        let (x, y) = toy();
        let cfg = TrainConfig {
            outer_iterations: 1,
            ..TrainConfig::default()
        };
        let model = fit(x.view(), y.view(), &cfg).unwrap();

        let bundle = build_bundle(x.view(), y.view(), cfg.kernel_width_mode).unwrap();
        let p0 = init_confidence(y.view()).unwrap();
        let w = agd_solve(x.view(), p0.values.view(), &cfg.agd_params(), Some(&WeightMatrix::zeros(2, 2)))
            .unwrap()
            .weights;
        let p = update_confidence(&p0, x.dot(&w.values).view(), &bundle, &cfg.p_update_params()).unwrap();
        assert_eq!(model.weights, w);
        assert_eq!(model.confidence.unwrap(), p);
        assert_eq!(model.objective_trace.len(), 1);
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, y) = toy();
        let cfg = TrainConfig::default();
        let a = fit(x.view(), y.view(), &cfg).unwrap();
        let b = fit(x.view(), y.view(), &cfg).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.objective_trace, b.objective_trace);
        assert_eq!(a.confidence, b.confidence);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let (x, y) = toy();
        let empty = Array2::<f64>::zeros((6, 0));
        assert!(matches!(fit(x.view(), empty.view(), &TrainConfig::default()), Err(PmlError::EmptyLabelSpace)));
        let short = y.slice(ndarray::s![..3, ..]).to_owned();
        assert!(matches!(
            fit(x.view(), short.view(), &TrainConfig::default()),
            Err(PmlError::ShapeMismatch { .. })
        ));
        let cfg = TrainConfig {
            outer_iterations: 0,
            ..TrainConfig::default()
        };
        assert!(fit(x.view(), y.view(), &cfg).is_err());
    }

    #[test]
    fn two_stage_runs() {
        let (x, y) = toy();
        let cfg = TrainConfig {
            joint: false,
            ..TrainConfig::default()
        };
        let model = fit(x.view(), y.view(), &cfg).unwrap();
        assert_eq!(model.objective_trace.len(), 2);
        assert!(model.objective_trace[1] <= model.objective_trace[0]);
        assert!(model.confidence.unwrap().respects_support());
    }

    #[test]
    fn predict_thresholds() {
        let w = WeightMatrix {
            values: array![[0.6, 0.4]],
        };
        let x = array![[1.0]];
        let p = predict(&w, x.view(), 0.5).unwrap();
        assert_eq!(p.labels, array![[1.0, 0.0]]);
        let low = predict(&w, (x * 0.1).view(), 0.5).unwrap();
        assert_eq!(low.labels, array![[0.0, 0.0]]);
        assert!(predict(&w, array![[1.0]].view(), 1.0).is_err());
        assert!(predict(&w, array![[1.0, 2.0]].view(), 0.5).is_err());
        assert_eq!(default_threshold(8), 0.125);
    }
}
