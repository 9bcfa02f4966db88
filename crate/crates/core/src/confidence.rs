//! The latent label-confidence matrix `P` and its multiplicative update.
//!
//! With `W` fixed, `P` minimizes
//!
//! ```text
//! ‖XW − P‖² + β‖H ⊙ (A − PPᵀ)‖² + λ‖P·1_q − 1_n‖²,   P ≥ 0
//! ```
//!
//! Half the gradient of that objective splits into a nonnegative part `D`
//! (denominator) and `N` (numerator), `∇P = D − N`, and the update is
//! `P ← P ⊙ sqrt(N / D)`. Zero entries stay zero, so mass never leaves the
//! candidate set.

use ndarray::{Array2, ArrayView2, Axis, Zip};

use crate::error::{PmlError, Result};
use crate::linalg::{check_same_shape, frobenius_sq, pos_neg_split};
use crate::similarity::SimilarityBundle;

/// Entries above this magnitude abort the update.
pub const BLOWUP_LIMIT: f64 = 1e12;
/// Replaces a zero denominator.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix {
    pub values: Array2<f64>,
    /// Binary copy of the candidate matrix.
    pub candidate_support: Array2<f64>,
}

impl ConfidenceMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    /// True when no mass sits outside the candidate set.
    pub fn respects_support(&self) -> bool {
        Zip::from(&self.values)
            .and(&self.candidate_support)
            .all(|&v, &s| s != 0.0 || v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PUpdateParams {
    pub beta: f64,
    pub lambda: f64,
    pub inner_iterations: usize,
    pub tolerance: f64,
}

impl Default for PUpdateParams {
    fn default() -> Self {
        PUpdateParams {
            beta: 10.0,
            lambda: 1.0,
            inner_iterations: 10,
            tolerance: 1e-6,
        }
    }
}

impl PUpdateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(PmlError::invalid("beta", format!("must be >= 0, got {}", self.beta)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(PmlError::invalid("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if self.inner_iterations == 0 {
            return Err(PmlError::invalid("inner_iterations", "must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(PmlError::invalid("tolerance", "must be > 0"));
        }
        Ok(())
    }
}

/// Uniform confidence over each instance's candidates; empty rows stay zero.
pub fn init_confidence(y: ArrayView2<f64>) -> Result<ConfidenceMatrix> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(PmlError::invalid("y", "candidate matrix must be binary"));
    }
    let mut values = y.to_owned();
    let mut empty = 0;
    for mut row in values.rows_mut() {
        let size = row.sum();
        if size > 0.0 {
            row.mapv_inplace(|v| v / size);
        } else {
            empty += 1;
        }
    }
    if empty > 0 {
        log::warn!("{empty} instances have no candidate labels; their confidence rows are zero");
    }
    Ok(ConfidenceMatrix {
        values,
        candidate_support: y.to_owned(),
    })
}

/// `Σ_{i≠j} (A_ij − p_iᵀp_j)²`
pub fn phi_objective(p: ArrayView2<f64>, bundle: &SimilarityBundle) -> f64 {
    let ppt = p.dot(&p.t());
    let mut total = 0.0;
    Zip::from(&bundle.joint_target)
        .and(&bundle.mask)
        .and(&ppt)
        .for_each(|&a, &h, &g| {
            let r = h * (a - g);
            total += r * r;
        });
    total
}

/// `Σ_i (Σ_c p_ic − 1)²`
pub fn row_sum_penalty(p: ArrayView2<f64>) -> f64 {
    p.sum_axis(Axis(1)).iter().map(|s| (s - 1.0) * (s - 1.0)).sum()
}

/// The penalized P-subproblem objective.
pub fn p_objective(
    p: ArrayView2<f64>,
    xw: ArrayView2<f64>,
    bundle: &SimilarityBundle,
    beta: f64,
    lambda: f64,
) -> f64 {
    frobenius_sq((&xw - &p).view()) + beta * phi_objective(p, bundle) + lambda * row_sum_penalty(p)
}

/// Numerator and denominator of the multiplicative rule; their difference
/// `den − num` is half the gradient of [`p_objective`].
struct GradientSplit {
    numerator: Array2<f64>,
    denominator: Array2<f64>,
}

/// Precomputed pieces that stay fixed while `P` iterates.
struct Workspace {
    masked_target: Array2<f64>,
    xw_plus: Array2<f64>,
    xw_minus: Array2<f64>,
    mask: Array2<f64>,
    beta: f64,
    lambda: f64,
}

impl Workspace {
    fn new(xw: ArrayView2<f64>, bundle: &SimilarityBundle, beta: f64, lambda: f64) -> Self {
        let (xw_plus, xw_minus) = pos_neg_split(xw);
        Workspace {
            masked_target: &bundle.mask * &bundle.joint_target,
            xw_plus,
            xw_minus,
            mask: bundle.mask.clone(),
            beta,
            lambda,
        }
    }

    fn split(&self, p: &Array2<f64>) -> GradientSplit {
        let ha = &self.masked_target;
        let hb = &self.mask * &p.dot(&p.t());
        let row_sums = p.sum_axis(Axis(1)).insert_axis(Axis(1));

        let mut numerator = &self.xw_plus + &(ha.dot(p) + ha.t().dot(p)) * self.beta;
        numerator += self.lambda;

        let mut denominator = p + &self.xw_minus;
        denominator += &((hb.dot(p) + hb.t().dot(p)) * self.beta);
        denominator += &(&row_sums * self.lambda);

        GradientSplit {
            numerator,
            denominator,
        }
    }
}

/// Half the gradient of the penalized P-subproblem objective:
///
/// `P − XW − β(H⊙(A − PPᵀ))P − β(H⊙(A − PPᵀ))ᵀP + λ(P·1_q − 1_n)1_qᵀ`
pub fn p_gradient(
    p: ArrayView2<f64>,
    xw: ArrayView2<f64>,
    bundle: &SimilarityBundle,
    beta: f64,
    lambda: f64,
) -> Array2<f64> {
    let residual = &bundle.mask * &(&bundle.joint_target - &p.dot(&p.t()));
    let row_excess = p.sum_axis(Axis(1)) - 1.0;
    let mut g = &p - &xw;
    g -= &(residual.dot(&p) * beta);
    g -= &(residual.t().dot(&p) * beta);
    g += &(row_excess.insert_axis(Axis(1)) * lambda);
    g
}

/// Runs the multiplicative rule up to `params.inner_iterations` times,
/// stopping early once the largest relative entry change drops below
/// `params.tolerance`.
pub fn update_confidence(
    p: &ConfidenceMatrix,
    xw: ArrayView2<f64>,
    bundle: &SimilarityBundle,
    params: &PUpdateParams,
) -> Result<ConfidenceMatrix> {
    params.validate()?;
    check_same_shape("update_confidence", p.values.view(), xw)?;
    if bundle.n() != p.n() {
        return Err(PmlError::ShapeMismatch {
            op: "update_confidence",
            left: p.values.dim(),
            right: bundle.joint_target.dim(),
        });
    }
    let ws = Workspace::new(xw, bundle, params.beta, params.lambda);
    let mut values = p.values.clone();
    for _ in 0..params.inner_iterations {
        let change = multiplicative_step(&mut values, &ws)?;
        if change < params.tolerance {
            break;
        }
    }
    Ok(ConfidenceMatrix {
        values,
        candidate_support: p.candidate_support.clone(),
    })
}

/// One application of the rule in place; returns the max relative change.
fn multiplicative_step(values: &mut Array2<f64>, ws: &Workspace) -> Result<f64> {
    let GradientSplit {
        numerator,
        denominator,
    } = ws.split(values);
    let mut max_change = 0.0f64;
    let mut blowup = None;
    Zip::from(&mut *values)
        .and(&numerator)
        .and(&denominator)
        .for_each(|v, &num, &den| {
            if *v == 0.0 {
                return;
            }
            let den = if den > 0.0 { den } else { den + DENOMINATOR_GUARD };
            let next = *v * (num / den).sqrt();
            max_change = max_change.max(((next - *v) / *v).abs());
            if !(next.abs() <= BLOWUP_LIMIT) {
                blowup.get_or_insert(next);
            }
            *v = next;
        });
    match blowup {
        Some(value) => Err(PmlError::NumericalBlowup { value }),
        None => Ok(max_change),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{build_bundle, off_diagonal_mask, KernelWidth, KernelWidthMode};
    use ndarray::array;

    fn bundle_from_target(a: Array2<f64>) -> SimilarityBundle {
        let n = a.nrows();
        SimilarityBundle {
            feature_sim: a.clone(),
            semantic_sim: Array2::ones((n, n)),
            joint_target: a,
            mask: off_diagonal_mask(n),
            kernel_width: KernelWidth {
                value: 1.0,
                degenerate: false,
            },
            empty_candidate_rows: 0,
        }
    }

    #[test]
    fn init_examples() {
        let y = array![
            [0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        ];
        let p = init_confidence(y.view()).unwrap();
        assert_eq!(p.values.row(0).to_vec(), vec![0.0, 0.5, 0.0, 0.0, 0.5, 0.0]);
        assert_eq!(p.values.row(1).to_vec(), vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(p.values.row(2).iter().all(|&v| v == 0.0));
        assert!(p.respects_support());
        assert!(init_confidence(array![[2.0]].view()).is_err());
    }

    #[test]
    fn hand_evaluated_update() {
        let p = init_confidence(array![[1.0, 1.0]].view()).unwrap();
        let xw = array![[1.0, 0.0]];
        let bundle = bundle_from_target(array![[1.0]]);
        let params = PUpdateParams {
            beta: 123.0,
            lambda: 1.0,
            inner_iterations: 1,
            tolerance: 1e-6,
        };
        let out = update_confidence(&p, xw.view(), &bundle, &params).unwrap();
        let expected = [0.5 * (4.0f64 / 3.0).sqrt(), 0.5 * (2.0f64 / 3.0).sqrt()];
        assert!((out.values[[0, 0]] - expected[0]).abs() < 1e-15);
        assert!((out.values[[0, 1]] - expected[1]).abs() < 1e-15);
        assert!((out.values[[0, 0]] - 0.5774).abs() < 1e-4);
        assert!((out.values[[0, 1]] - 0.4082).abs() < 1e-4);
    }

    #[test]
    fn fixed_point_is_unchanged() {
        // n = 1 and beta terms vanish; with lambda = 0 and XW = P the split is
        // numerator = P = denominator.
        let p = ConfidenceMatrix {
            values: array![[0.3, 0.7]],
            candidate_support: array![[1.0, 1.0]],
        };
        let bundle = bundle_from_target(array![[1.0]]);
        let params = PUpdateParams {
            beta: 10.0,
            lambda: 0.0,
            inner_iterations: 5,
            tolerance: 1e-12,
        };
        let out = update_confidence(&p, p.values.view(), &bundle, &params).unwrap();
        assert_eq!(out.values, p.values);
    }

    #[test]
    fn zero_entries_stay_zero() {
        let y = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]];
        let x = array![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let bundle = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
        let p = init_confidence(y.view()).unwrap();
        let xw = array![[5.0, 5.0, -1.0], [2.0, 0.0, 1.0], [0.0, 3.0, 3.0]];
        let out = update_confidence(&p, xw.view(), &bundle, &PUpdateParams::default()).unwrap();
        assert!(out.respects_support());
        assert_eq!(out.values[[0, 1]], 0.0);
        assert_eq!(out.values[[1, 0]], 0.0);
        assert_eq!(out.values[[2, 2]], 0.0);
        assert!(out.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn gradient_is_den_minus_num() {
        let y = array![[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0]];
        let x = array![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let bundle = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
        let p = array![[0.2, 0.9, 0.0], [0.0, 0.4, 0.3], [0.1, 0.2, 0.6]];
        let xw = array![[0.5, -1.0, 0.2], [0.1, 0.0, 1.0], [-0.3, 0.8, 0.4]];
        let ws = Workspace::new(xw.view(), &bundle, 2.0, 0.7);
        let split = ws.split(&p);
        let g = p_gradient(p.view(), xw.view(), &bundle, 2.0, 0.7);
        let diff = &split.denominator - &split.numerator;
        for (a, b) in diff.iter().zip(g.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blowup_is_reported() {
        let p = ConfidenceMatrix {
            values: array![[1e11, 1.0]],
            candidate_support: array![[1.0, 1.0]],
        };
        let xw = array![[1e30, 0.0]];
        let bundle = bundle_from_target(array![[1.0]]);
        let err = update_confidence(&p, xw.view(), &bundle, &PUpdateParams::default());
        assert!(matches!(err, Err(PmlError::NumericalBlowup { .. })));
    }

    #[test]
    fn phi_examples() {
        let mut a = array![[0.0, 0.5], [0.5, 0.0]];
        let bundle = bundle_from_target(a.clone());
        let p = array![[1.0, 0.0], [0.0, 1.0]];
        assert!((phi_objective(p.view(), &bundle) - 0.5).abs() < 1e-15);

        // perfect off-diagonal fit, arbitrary diagonal of A
        let p = array![[1.0, 0.0], [0.5, 0.3]];
        a = p.dot(&p.t());
        a[[0, 0]] += 7.0;
        assert_eq!(phi_objective(p.view(), &bundle_from_target(a)), 0.0);
    }

    #[test]
    fn row_sum_penalty_examples() {
        let y = array![[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let p = init_confidence(y.view()).unwrap();
        assert_eq!(row_sum_penalty(p.values.view()), 0.0);
        let p = array![[1.0, 0.5], [0.25, 0.75], [1.0, 0.0]];
        assert!((row_sum_penalty(p.view()) - 0.25).abs() < 1e-15);
        assert_eq!(row_sum_penalty(Array2::<f64>::zeros((4, 3)).view()), 4.0);
    }

    #[test]
    fn params_validation() {
        let mut p = PUpdateParams::default();
        assert!(p.validate().is_ok());
        p.inner_iterations = 0;
        assert!(p.validate().is_err());
        let p = PUpdateParams {
            beta: -1.0,
            ..PUpdateParams::default()
        };
        assert!(p.validate().is_err());
    }
}
