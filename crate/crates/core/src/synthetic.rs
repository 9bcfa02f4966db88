//! Planted low-rank multi-label data for tests and benchmarks.
//!
//! Features are standard normal, the hidden coefficients are a product of two
//! Gaussian factors of width `rank`, and each instance's true labels are the
//! top `k` entries of its (optionally perturbed) planted scores, with `k`
//! drawn uniformly from `labels_per_instance`.

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{PmlError, Result};
use crate::rng::{stream, PortableRng};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub rank: usize,
    /// Inclusive range of true labels per instance.
    pub labels_per_instance: (usize, usize),
    /// Standard deviation of Gaussian noise added to the planted scores
    /// before picking the top labels.
    pub score_noise: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n: 200,
            d: 20,
            q: 8,
            rank: 3,
            labels_per_instance: (1, 3),
            score_noise: 0.0,
            seed: 0,
        }
    }
}

/// Generates a dataset whose candidates equal its ground truth.
pub fn planted_dataset(spec: &PlantedSpec) -> Result<Dataset> {
    let (lo, hi) = spec.labels_per_instance;
    if spec.n == 0 || spec.d == 0 || spec.rank == 0 {
        return Err(PmlError::invalid("planted", "n, d and rank must be positive"));
    }
    if spec.q == 0 {
        return Err(PmlError::EmptyLabelSpace);
    }
    if lo > hi || hi > spec.q {
        return Err(PmlError::invalid(
            "labels_per_instance",
            format!("need lo <= hi <= q, got ({lo}, {hi}) with q = {}", spec.q),
        ));
    }
    let mut rng = PortableRng::new(spec.seed, stream::SYNTH);
    let x = Array2::from_shape_fn((spec.n, spec.d), |_| rng.normal());
    let left = Array2::from_shape_fn((spec.d, spec.rank), |_| rng.normal());
    let right = Array2::from_shape_fn((spec.rank, spec.q), |_| rng.normal());
    let mut scores = x.dot(&left.dot(&right));
    if spec.score_noise > 0.0 {
        scores.mapv_inplace(|s| s + spec.score_noise * rng.normal());
    }

    let mut truth = Array2::zeros((spec.n, spec.q));
    for (i, row) in scores.rows().into_iter().enumerate() {
        let k = lo + rng.below((hi - lo + 1) as u64) as usize;
        let mut order: Vec<usize> = (0..spec.q).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &c in &order[..k] {
            truth[[i, c]] = 1.0;
        }
    }
    Dataset::new("planted", x, truth.clone(), Some(truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_label_counts() {
        let ds = planted_dataset(&PlantedSpec {
            n: 50,
            seed: 4,
            ..PlantedSpec::default()
        })
        .unwrap();
        assert_eq!((ds.n(), ds.d(), ds.q()), (50, 20, 8));
        for row in ds.candidates.rows() {
            let k = row.sum() as usize;
            assert!((1..=3).contains(&k));
        }
        assert_eq!(ds.ground_truth.as_ref().unwrap(), &ds.candidates);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = PlantedSpec {
            n: 30,
            seed: 9,
            ..PlantedSpec::default()
        };
        assert_eq!(planted_dataset(&spec).unwrap(), planted_dataset(&spec).unwrap());
        let other = PlantedSpec { seed: 10, ..spec };
        assert_ne!(
            planted_dataset(&other).unwrap().features,
            planted_dataset(&PlantedSpec { seed: 9, ..other.clone() }).unwrap().features
        );
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = PlantedSpec {
            labels_per_instance: (3, 9),
            ..PlantedSpec::default()
        };
        assert!(planted_dataset(&bad).is_err());
        let empty = PlantedSpec {
            q: 0,
            labels_per_instance: (0, 0),
            ..PlantedSpec::default()
        };
        assert!(matches!(planted_dataset(&empty), Err(PmlError::EmptyLabelSpace)));
    }
}
