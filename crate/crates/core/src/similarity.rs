//! Instance similarities: Gaussian heat kernel on features, cosine on
//! candidate label vectors, and their product as the target for `PPᵀ`.

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, ArrayView2};

use crate::error::{PmlError, Result};
use crate::linalg::hadamard;

/// Smallest kernel width ever returned.
pub const MIN_KERNEL_WIDTH: f64 = 1e-12;

/// How the heat-kernel width `t` is derived from pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelWidthMode {
    /// `Σ_{i≠j} ‖x_i − x_j‖ / (n − 1)`. Grows linearly with `n`, which drives
    /// every `s_ij` towards 1 on all but tiny datasets.
    PairSum,
    /// `Σ_{i≠j} ‖x_i − x_j‖ / (n (n − 1))`, the mean pairwise distance.
    #[default]
    MeanPairwise,
}

impl fmt::Display for KernelWidthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelWidthMode::PairSum => "pair-sum",
            KernelWidthMode::MeanPairwise => "mean-pairwise",
        })
    }
}

impl FromStr for KernelWidthMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pair-sum" => Ok(KernelWidthMode::PairSum),
            "mean-pairwise" => Ok(KernelWidthMode::MeanPairwise),
            other => Err(format!("expected `pair-sum` or `mean-pairwise`, got `{other}`")),
        }
    }
}

/// Which similarity feeds the joint target `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityMode {
    /// `A = S ⊙ C`
    #[default]
    Both,
    /// `A = S`
    FeatureOnly,
    /// `A = C`
    LabelOnly,
}

impl fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityMode::Both => "both",
            SimilarityMode::FeatureOnly => "feature_only",
            SimilarityMode::LabelOnly => "label_only",
        })
    }
}

impl FromStr for SimilarityMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "both" => Ok(SimilarityMode::Both),
            "feature_only" => Ok(SimilarityMode::FeatureOnly),
            "label_only" => Ok(SimilarityMode::LabelOnly),
            other => Err(format!(
                "expected `both`, `feature_only` or `label_only`, got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelWidth {
    pub value: f64,
    /// All instances coincide; `value` was clamped.
    pub degenerate: bool,
}

/// Similarity matrices computed once from the training split.
#[derive(Debug, Clone)]
pub struct SimilarityBundle {
    pub feature_sim: Array2<f64>,
    pub semantic_sim: Array2<f64>,
    pub joint_target: Array2<f64>,
    /// Zero diagonal, ones elsewhere.
    pub mask: Array2<f64>,
    pub kernel_width: KernelWidth,
    /// Instances with no candidate labels.
    pub empty_candidate_rows: usize,
}

impl SimilarityBundle {
    pub fn n(&self) -> usize {
        self.joint_target.nrows()
    }

    /// Replaces the joint target according to `mode`.
    pub fn with_mode(mut self, mode: SimilarityMode) -> Self {
        self.joint_target = match mode {
            SimilarityMode::Both => &self.feature_sim * &self.semantic_sim,
            SimilarityMode::FeatureOnly => self.feature_sim.clone(),
            SimilarityMode::LabelOnly => self.semantic_sim.clone(),
        };
        self
    }
}

fn pairwise_sq_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let s: f64 = xi
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[[i, j]] = s;
            d[[j, i]] = s;
        }
    }
    d
}

fn width_from_sq_distances(sq: &Array2<f64>, mode: KernelWidthMode) -> Result<KernelWidth> {
    let n = sq.nrows();
    if n < 2 {
        return Err(PmlError::invalid("x", format!("kernel width needs n >= 2, got {n}")));
    }
    // Ordered pairs: each unordered distance counts twice.
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 2.0 * sq[[i, j]].sqrt();
        }
    }
    let divisor = match mode {
        KernelWidthMode::PairSum => (n - 1) as f64,
        KernelWidthMode::MeanPairwise => (n * (n - 1)) as f64,
    };
    let raw = total / divisor;
    if raw > MIN_KERNEL_WIDTH {
        Ok(KernelWidth {
            value: raw,
            degenerate: false,
        })
    } else {
        warn!("all {n} instances are identical; kernel width clamped to {MIN_KERNEL_WIDTH:e}");
        Ok(KernelWidth {
            value: MIN_KERNEL_WIDTH,
            degenerate: true,
        })
    }
}

pub fn kernel_width(x: ArrayView2<f64>, mode: KernelWidthMode) -> Result<KernelWidth> {
    width_from_sq_distances(&pairwise_sq_distances(x), mode)
}

fn heat_kernel(sq: &Array2<f64>, t: f64) -> Array2<f64> {
    let t2 = t * t;
    let mut s = sq.mapv(|d| (-d / t2).exp());
    s.diag_mut().fill(1.0);
    s
}

/// `s_ij = exp(−‖x_i − x_j‖² / t²)`.
pub fn feature_similarity(x: ArrayView2<f64>, t: f64) -> Result<Array2<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(PmlError::invalid("t", format!("kernel width must be > 0, got {t}")));
    }
    Ok(heat_kernel(&pairwise_sq_distances(x), t))
}

/// Cosine similarity between candidate indicator rows.
///
/// Rows without candidates are zero against everything, themselves included.
/// Returns the similarity and the number of such rows.
pub fn semantic_similarity(y: ArrayView2<f64>) -> Result<(Array2<f64>, usize)> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(PmlError::invalid("y", "candidate matrix must be binary"));
    }
    let n = y.nrows();
    let sizes: Vec<f64> = y.rows().into_iter().map(|r| r.sum()).collect();
    let overlap = y.dot(&y.t());
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        if sizes[i] == 0.0 {
            continue;
        }
        c[[i, i]] = 1.0;
        for j in (i + 1)..n {
            if sizes[j] == 0.0 {
                continue;
            }
            let v = overlap[[i, j]] / (sizes[i] * sizes[j]).sqrt();
            c[[i, j]] = v;
            c[[j, i]] = v;
        }
    }
    let empty = sizes.iter().filter(|&&s| s == 0.0).count();
    if empty > 0 {
        warn!("{empty} of {n} instances have no candidate labels; their semantic similarity is 0");
    }
    Ok((c, empty))
}

pub fn off_diagonal_mask(n: usize) -> Array2<f64> {
    let mut h = Array2::ones((n, n));
    h.diag_mut().fill(0.0);
    h
}

pub fn build_bundle(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    mode: KernelWidthMode,
) -> Result<SimilarityBundle> {
    if x.nrows() != y.nrows() {
        return Err(PmlError::ShapeMismatch {
            op: "build_bundle",
            left: x.dim(),
            right: y.dim(),
        });
    }
    let sq = pairwise_sq_distances(x);
    let width = width_from_sq_distances(&sq, mode)?;
    let feature_sim = heat_kernel(&sq, width.value);
    let (semantic_sim, empty) = semantic_similarity(y)?;
    let joint_target = hadamard(feature_sim.view(), semantic_sim.view())?;
    Ok(SimilarityBundle {
        mask: off_diagonal_mask(x.nrows()),
        feature_sim,
        semantic_sim,
        joint_target,
        kernel_width: width,
        empty_candidate_rows: empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Axis};
    use proptest::prelude::*;

    #[test]
    fn width_two_points() {
        let x = array![[0.0], [1.0]];
        let w = kernel_width(x.view(), KernelWidthMode::PairSum).unwrap();
        assert_eq!(w.value, 2.0);
        assert!(!w.degenerate);
    }

    #[test]
    fn width_three_collinear_points() {
        let x = array![[0.0], [1.0], [2.0]];
        assert_eq!(kernel_width(x.view(), KernelWidthMode::PairSum).unwrap().value, 4.0);
        // mean over 6 ordered pairs: 8 / 6
        let mean = kernel_width(x.view(), KernelWidthMode::MeanPairwise).unwrap();
        assert!((mean.value - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn width_identical_points_clamped() {
        let x = Array2::from_elem((4, 3), 2.5);
        let w = kernel_width(x.view(), KernelWidthMode::PairSum).unwrap();
        assert_eq!(w.value, MIN_KERNEL_WIDTH);
        assert!(w.degenerate);
        assert!(kernel_width(array![[1.0]].view(), KernelWidthMode::PairSum).is_err());
    }

    #[test]
    fn heat_kernel_values() {
        let x = array![[0.0], [1.0], [0.0]];
        let s = feature_similarity(x.view(), 2.0).unwrap();
        assert_eq!(s[[0, 2]], 1.0);
        assert!((s[[0, 1]] - (-0.25f64).exp()).abs() < 1e-15);
        assert!((s[[0, 1]] - 0.7788).abs() < 1e-4);
        let x = array![[0.0, 0.0], [3.0, 4.0]];
        let s = feature_similarity(x.view(), 5.0).unwrap();
        assert!((s[[0, 1]] - (-1.0f64).exp()).abs() < 1e-15);
        assert!(feature_similarity(x.view(), 0.0).is_err());
    }

    #[test]
    fn cosine_cases() {
        let y = array![
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0]
        ];
        let (c, empty) = semantic_similarity(y.view()).unwrap();
        assert_eq!(empty, 1);
        assert_eq!(c[[0, 2]], 1.0);
        assert!((c[[0, 1]] - 0.5).abs() < 1e-15);
        assert_eq!(c[[0, 3]], 0.0);
        assert_eq!(c[[3, 3]], 1.0);
        assert_eq!(c[[4, 4]], 0.0);
        assert!(c.row(4).iter().all(|&v| v == 0.0));
        assert_eq!(c, c.t());
        assert!(semantic_similarity(array![[0.5, 1.0]].view()).is_err());
    }

    #[test]
    fn bundle_examples() {
        let x = array![[1.0, 2.0], [1.0, 2.0]];
        let y = array![[1.0, 0.0], [1.0, 0.0]];
        let b = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
        assert_eq!(b.joint_target[[0, 1]], 1.0);
        assert_eq!(b.mask, array![[0.0, 1.0], [1.0, 0.0]]);

        let x = array![[0.0], [5.0]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let b = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
        assert_eq!(b.joint_target[[0, 1]], 0.0);

        assert!(build_bundle(x.view(), array![[1.0]].view(), KernelWidthMode::PairSum).is_err());
    }

    #[test]
    fn low_feature_high_semantic_regime() {
        let s = array![[1.0, 0.2], [0.2, 1.0]];
        let c = array![[1.0, 0.9], [0.9, 1.0]];
        let a = hadamard(s.view(), c.view()).unwrap();
        assert!((a[[0, 1]] - 0.18).abs() < 1e-15);
    }

    #[test]
    fn with_mode_replaces_target() {
        let x = array![[0.0], [1.0], [3.0]];
        let y = array![[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let b = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
        let f = b.clone().with_mode(SimilarityMode::FeatureOnly);
        assert_eq!(f.joint_target, b.feature_sim);
        let l = b.clone().with_mode(SimilarityMode::LabelOnly);
        assert_eq!(l.joint_target, b.semantic_sim);
        let both = b.clone().with_mode(SimilarityMode::Both);
        assert_eq!(both.joint_target, b.joint_target);
    }

    fn data() -> impl Strategy<Value = (Array2<f64>, Array2<f64>)> {
        (2usize..8, 1usize..4, 1usize..5).prop_flat_map(|(n, d, q)| {
            (
                prop::collection::vec(-5.0f64..5.0, n * d)
                    .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap()),
                prop::collection::vec(prop::bool::ANY, n * q).prop_map(move |v| {
                    Array2::from_shape_vec((n, q), v.into_iter().map(f64::from).collect())
                        .unwrap()
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn bundle_invariants((x, y) in data()) {
            let b = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
            let n = x.nrows();
            for i in 0..n {
                prop_assert_eq!(b.feature_sim[[i, i]], 1.0);
                prop_assert_eq!(b.mask[[i, i]], 0.0);
                let nonempty = y.row(i).sum() > 0.0;
                prop_assert_eq!(b.semantic_sim[[i, i]], if nonempty { 1.0 } else { 0.0 });
                for j in 0..n {
                    prop_assert_eq!(b.feature_sim[[i, j]], b.feature_sim[[j, i]]);
                    prop_assert_eq!(b.semantic_sim[[i, j]], b.semantic_sim[[j, i]]);
                    prop_assert!(b.feature_sim[[i, j]] > 0.0 && b.feature_sim[[i, j]] <= 1.0);
                    prop_assert!((0.0..=1.0).contains(&b.semantic_sim[[i, j]]));
                    prop_assert_eq!(
                        b.joint_target[[i, j]],
                        b.feature_sim[[i, j]] * b.semantic_sim[[i, j]]
                    );
                    if i != j {
                        prop_assert_eq!(b.mask[[i, j]], 1.0);
                    }
                }
            }
        }

        #[test]
        fn feature_similarity_scale_invariant((x, _y) in data(), c in 0.01f64..100.0) {
            let base = {
                let t = kernel_width(x.view(), KernelWidthMode::PairSum).unwrap().value;
                feature_similarity(x.view(), t).unwrap()
            };
            let xs = &x * c;
            let t = kernel_width(xs.view(), KernelWidthMode::PairSum).unwrap().value;
            let scaled = feature_similarity(xs.view(), t).unwrap();
            for (a, b) in base.iter().zip(scaled.iter()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn permutation_conjugates((x, y) in data(), seed in any::<u64>()) {
            let n = x.nrows();
            let mut perm: Vec<usize> = (0..n).collect();
            crate::rng::PortableRng::new(seed, 0).shuffle(&mut perm);
            let xp = x.select(Axis(0), &perm);
            let yp = y.select(Axis(0), &perm);
            let b = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
            let bp = build_bundle(xp.view(), yp.view(), KernelWidthMode::PairSum).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let (pi, pj) = (perm[i], perm[j]);
                    prop_assert!((bp.feature_sim[[i, j]] - b.feature_sim[[pi, pj]]).abs() < 1e-12);
                    prop_assert_eq!(bp.semantic_sim[[i, j]], b.semantic_sim[[pi, pj]]);
                    prop_assert!((bp.joint_target[[i, j]] - b.joint_target[[pi, pj]]).abs() < 1e-12);
                    prop_assert_eq!(bp.mask[[i, j]], b.mask[[pi, pj]]);
                }
            }
        }

        #[test]
        fn semantic_ignores_features((x, y) in data()) {
            let widened = ndarray::concatenate(Axis(1), &[x.view(), x.column(0).insert_axis(Axis(1))]).unwrap();
            let a = build_bundle(x.view(), y.view(), KernelWidthMode::PairSum).unwrap();
            let b = build_bundle(widened.view(), y.view(), KernelWidthMode::PairSum).unwrap();
            prop_assert_eq!(a.semantic_sim, b.semantic_sim);
        }
    }
}
