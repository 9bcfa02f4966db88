//! Dense matrix helpers: SVD, nuclear norm, singular value thresholding and
//! the positive/negative split used by the multiplicative updates.

use faer::Mat;
use ndarray::{Array1, Array2, ArrayView2, Zip};

use crate::error::{PmlError, Result};

/// Thin singular value decomposition `m = U diag(σ) Vᵀ` with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × k`
    pub left_vectors: Array2<f64>,
    /// Nonincreasing, nonnegative, length `k`.
    pub singular_values: Array1<f64>,
    /// `cols × k`
    pub right_vectors: Array2<f64>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.left_vectors * &self.singular_values;
        scaled.dot(&self.right_vectors.t())
    }
}

/// Thin SVD with singular values sorted in nonincreasing order.
///
/// Each left singular vector is oriented so that its first nonzero entry is
/// positive, which makes the result a deterministic function of the input.
pub fn svd(m: ArrayView2<f64>) -> Result<SvdResult> {
    let (rows, cols) = m.dim();
    ensure_finite("svd input", m)?;
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdResult {
            left_vectors: Array2::zeros((rows, 0)),
            singular_values: Array1::zeros(0),
            right_vectors: Array2::zeros((cols, 0)),
        });
    }

    let decomposition = Mat::from_fn(rows, cols, |i, j| m[[i, j]])
        .thin_svd()
        .map_err(|_| PmlError::NonConvergence { rows, cols })?;
    let (u, v) = (decomposition.U(), decomposition.V());
    let sigma = decomposition.S().column_vector();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let mut left = Array2::zeros((rows, k));
    let mut right = Array2::zeros((cols, k));
    let mut values = Array1::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let sign = match (0..rows).map(|i| u[(i, src)]).find(|&x| x != 0.0) {
            Some(first) if first < 0.0 => -1.0,
            _ => 1.0,
        };
        for i in 0..rows {
            left[[i, dst]] = sign * u[(i, src)];
        }
        for j in 0..cols {
            right[[j, dst]] = sign * v[(j, src)];
        }
        values[dst] = sigma[src].max(0.0);
    }

    Ok(SvdResult {
        left_vectors: left,
        singular_values: values,
        right_vectors: right,
    })
}

/// Sum of singular values.
pub fn nuclear_norm(m: ArrayView2<f64>) -> Result<f64> {
    Ok(svd(m)?.singular_values.sum())
}

/// Proximal operator of `tau·‖·‖_*`: soft-thresholds the singular values of `m`.
pub fn singular_value_threshold(m: ArrayView2<f64>, tau: f64) -> Result<Array2<f64>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(PmlError::invalid("tau", format!("must be finite and >= 0, got {tau}")));
    }
    if tau == 0.0 {
        ensure_finite("svt input", m)?;
        return Ok(m.to_owned());
    }
    let mut decomposition = svd(m)?;
    decomposition
        .singular_values
        .mapv_inplace(|s| (s - tau).max(0.0));
    Ok(decomposition.reconstruct())
}

/// Splits `m` into `(m⁺, m⁻)` with `m⁺ = (|m| + m)/2`, `m⁻ = (|m| − m)/2`.
pub fn pos_neg_split(m: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    // max(x, 0) and max(-x, 0) reconstruct x exactly, unlike (|x| ± x)/2
    // which can round.
    let plus = m.mapv(|x| x.max(0.0));
    let minus = m.mapv(|x| (-x).max(0.0));
    (plus, minus)
}

pub fn hadamard(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_same_shape("hadamard", a, b)?;
    Ok(&a * &b)
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

pub fn frobenius_norm(m: ArrayView2<f64>) -> f64 {
    frobenius_sq(m).sqrt()
}

/// Frobenius inner product `⟨a, b⟩ = Σ a_ij b_ij`.
pub fn inner(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

pub fn ensure_finite(what: &'static str, m: ArrayView2<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PmlError::NonFinite { what })
    }
}

pub(crate) fn check_same_shape(
    op: &'static str,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(PmlError::ShapeMismatch {
            op,
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}
