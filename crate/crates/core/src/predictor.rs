//! Low-rank linear predictor: solves `min_W ‖XW − P‖² + α‖W‖_*` by
//! accelerated proximal gradient with backtracking on the Lipschitz estimate.

use ndarray::{Array2, ArrayView2};

use crate::error::{PmlError, Result};
use crate::linalg::{ensure_finite, frobenius_sq, inner, nuclear_norm, singular_value_threshold};

/// Maximum number of Lipschitz increases within one iteration.
pub const MAX_BACKTRACKS: usize = 60;

/// `d × q` coefficients; scores are `X · W`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub values: Array2<f64>,
}

impl WeightMatrix {
    pub fn zeros(d: usize, q: usize) -> Self {
        WeightMatrix {
            values: Array2::zeros((d, q)),
        }
    }

    pub fn d(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgdParams {
    /// Initial Lipschitz estimate.
    pub l0: f64,
    /// Backtracking growth factor.
    pub gamma: f64,
    pub alpha: f64,
    pub max_iterations: usize,
    /// Relative objective change that ends the solve.
    pub tolerance: f64,
}

impl Default for AgdParams {
    fn default() -> Self {
        AgdParams {
            l0: 1.0,
            gamma: 2.0,
            alpha: 10.0,
            max_iterations: 200,
            tolerance: 1e-6,
        }
    }
}

impl AgdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > 0.0) || !self.l0.is_finite() {
            return Err(PmlError::invalid("l0", format!("must be > 0, got {}", self.l0)));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(PmlError::invalid("gamma", format!("must be > 1, got {}", self.gamma)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(PmlError::invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if self.max_iterations == 0 {
            return Err(PmlError::invalid("max_iterations", "must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(PmlError::invalid("tolerance", "must be > 0"));
        }
        Ok(())
    }
}

/// Result of [`agd_solve`].
#[derive(Debug, Clone)]
pub struct AgdSolution {
    pub weights: WeightMatrix,
    /// `F(W_t)` for the starting point and every accepted iterate.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Times momentum was discarded because the accelerated step went uphill.
    pub restarts: usize,
    /// Final Lipschitz estimate.
    pub lipschitz: f64,
    pub converged: bool,
}

/// `‖XW − P‖²`
pub fn f_smooth(w: ArrayView2<f64>, x: ArrayView2<f64>, p: ArrayView2<f64>) -> f64 {
    frobenius_sq((&x.dot(&w) - &p).view())
}

/// `∇f(W) = 2Xᵀ(XW − P)`
pub fn grad_smooth(w: ArrayView2<f64>, x: ArrayView2<f64>, p: ArrayView2<f64>) -> Array2<f64> {
    x.t().dot(&(&x.dot(&w) - &p)) * 2.0
}

/// `‖XW − P‖² + α‖W‖_*`
pub fn full_objective_w(
    w: ArrayView2<f64>,
    x: ArrayView2<f64>,
    p: ArrayView2<f64>,
    alpha: f64,
) -> Result<f64> {
    let reg = if alpha == 0.0 { 0.0 } else { alpha * nuclear_norm(w)? };
    Ok(f_smooth(w, x, p) + reg)
}

/// Proximal gradient step from `z` with step `1/l`:
/// `svt(Z − ∇f(Z)/l, α/l)`.
pub fn prox_step(
    z: ArrayView2<f64>,
    grad: ArrayView2<f64>,
    l: f64,
    alpha: f64,
) -> Result<Array2<f64>> {
    let g = &z - &(&grad / l);
    singular_value_threshold(g.view(), alpha / l)
}

fn check_shapes(x: ArrayView2<f64>, p: ArrayView2<f64>, w0: Option<&WeightMatrix>) -> Result<()> {
    if x.nrows() != p.nrows() {
        return Err(PmlError::ShapeMismatch {
            op: "agd_solve",
            left: x.dim(),
            right: p.dim(),
        });
    }
    if let Some(w) = w0 {
        if w.values.dim() != (x.ncols(), p.ncols()) {
            return Err(PmlError::ShapeMismatch {
                op: "agd_solve warm start",
                left: w.values.dim(),
                right: (x.ncols(), p.ncols()),
            });
        }
    }
    Ok(())
}

/// Accelerated proximal gradient for the W-subproblem.
///
/// Each step backtracks `l ← γl` until the candidate `W = p_l(Z)` satisfies
/// `F(W) ≤ Q_l(W, Z)`; `l` never decreases across iterations. Momentum
/// follows `δ_{t+1} = (1 + sqrt(1 + 4δ_t²))/2`,
/// `Z_{t+1} = W_t + ((δ_t − 1)/δ_{t+1})(W_t − W_{t−1})`. When an
/// accelerated candidate would raise `F`, it is discarded and the step is
/// retaken from `W_t` with the momentum reset, so `F(W_t)` never increases.
pub fn agd_solve(
    x: ArrayView2<f64>,
    p: ArrayView2<f64>,
    params: &AgdParams,
    warm_start: Option<&WeightMatrix>,
) -> Result<AgdSolution> {
    params.validate()?;
    check_shapes(x, p, warm_start)?;
    ensure_finite("features", x)?;
    ensure_finite("targets", p)?;

    let alpha = params.alpha;
    let mut w = match warm_start {
        Some(w0) => {
            ensure_finite("warm start", w0.values.view())?;
            w0.values.clone()
        }
        None => Array2::zeros((x.ncols(), p.ncols())),
    };
    let mut z = w.clone();
    let mut momentum = false;
    let mut delta = 1.0f64;
    let mut l = params.l0;

    let mut current = full_objective_w(w.view(), x, p, alpha)?;
    let mut trace = vec![current];
    let mut restarts = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iterations {
        iterations += 1;
        let fz = f_smooth(z.view(), x, p);
        let gz = grad_smooth(z.view(), x, p);

        let mut doublings = 0;
        let candidate = loop {
            let cand = prox_step(z.view(), gz.view(), l, alpha)?;
            let step = &cand - &z;
            let model = fz + inner(step.view(), gz.view()) + 0.5 * l * frobenius_sq(step.view());
            let actual = f_smooth(cand.view(), x, p);
            if actual <= model + 1e-12 * model.abs().max(1.0) {
                break cand;
            }
            doublings += 1;
            if doublings > MAX_BACKTRACKS {
                return Err(PmlError::LineSearchStall { doublings });
            }
            l *= params.gamma;
        };

        let value = full_objective_w(candidate.view(), x, p, alpha)?;
        if value > current {
            if momentum {
                restarts += 1;
                z.assign(&w);
                delta = 1.0;
                momentum = false;
                continue;
            }
            // A plain prox step from W_t cannot go uphill except by rounding.
            converged = true;
            break;
        }

        let delta_next = (1.0 + (1.0 + 4.0 * delta * delta).sqrt()) / 2.0;
        let w_prev = std::mem::replace(&mut w, candidate);
        z = &w + &((&w - &w_prev) * ((delta - 1.0) / delta_next));
        momentum = delta > 1.0;
        delta = delta_next;

        let rel = (current - value) / current.abs().max(f64::MIN_POSITIVE);
        current = value;
        trace.push(value);
        if rel < params.tolerance {
            converged = true;
            break;
        }
    }

    ensure_finite("weights", w.view())?;
    Ok(AgdSolution {
        weights: WeightMatrix { values: w },
        objective_trace: trace,
        iterations,
        restarts,
        lipschitz: l,
        converged,
    })
}

/// `X_test · W`
pub fn predict_scores(w: &WeightMatrix, x_test: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x_test.ncols() != w.d() {
        return Err(PmlError::ShapeMismatch {
            op: "predict_scores",
            left: x_test.dim(),
            right: w.values.dim(),
        });
    }
    Ok(x_test.dot(&w.values))
}
