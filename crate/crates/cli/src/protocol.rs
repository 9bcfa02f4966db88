//! The benchmark protocol shared by `bench`, `sweep` and `ablate`: inject
//! noise into the ground truth, split 80/20, fit on the noisy training
//! candidates and score the test split against its ground truth.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use pml_lfc::data::{inject_noise, split, Dataset, NoiseSpec};
use pml_lfc::metrics::evaluate;
use pml_lfc::predictor::{agd_solve, WeightMatrix};
use pml_lfc::similarity::SimilarityMode;
use pml_lfc::trainer::{default_threshold, fit, predict};
use pml_lfc::{PmlError, Result, TrainConfig};
use rayon::prelude::*;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_NOISE_GRID: [f64; 4] = [10.0, 50.0, 100.0, 200.0];
pub const DEFAULT_SWEEP_GRID: [f64; 6] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Joint training with `A = S ⊙ C`.
    Both,
    FeatureOnly,
    LabelOnly,
    /// P estimated first, then W fit once.
    TwoStage,
    /// Nuclear-norm least squares straight on the noisy candidates.
    Baseline,
}

impl Variant {
    pub const ABLATION: [Variant; 4] = [
        Variant::Both,
        Variant::FeatureOnly,
        Variant::LabelOnly,
        Variant::TwoStage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Both => "both",
            Variant::FeatureOnly => "feature_only",
            Variant::LabelOnly => "label_only",
            Variant::TwoStage => "two_stage",
            Variant::Baseline => "baseline",
        }
    }

    /// `None` for the baseline, which has no confidence step.
    pub fn joint(self) -> Option<bool> {
        match self {
            Variant::Baseline => None,
            Variant::TwoStage => Some(false),
            _ => Some(true),
        }
    }

    pub fn configure(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        let (mode, joint) = match self {
            Variant::Both | Variant::Baseline => (SimilarityMode::Both, true),
            Variant::FeatureOnly => (SimilarityMode::FeatureOnly, true),
            Variant::LabelOnly => (SimilarityMode::LabelOnly, true),
            Variant::TwoStage => (SimilarityMode::Both, false),
        };
        cfg.similarity_mode = mode;
        cfg.joint = joint;
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "both" => Ok(Variant::Both),
            "feature_only" => Ok(Variant::FeatureOnly),
            "label_only" => Ok(Variant::LabelOnly),
            "two_stage" => Ok(Variant::TwoStage),
            "baseline" => Ok(Variant::Baseline),
            other => Err(format!(
                "unknown variant `{other}` (expected both, feature_only, label_only, two_stage or baseline)"
            )),
        }
    }
}

/// One configuration evaluated over all repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub variant: Variant,
    pub noise_pct: f64,
    /// Base config; the variant's settings and the repeat seed are applied on top.
    pub config: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub hamming: f64,
    pub one_error: f64,
    pub coverage: f64,
    pub ranking: f64,
    pub avgprec: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 5] = ["hamming", "one_error", "coverage", "ranking", "avgprec"];

    pub fn values(&self) -> [f64; 5] {
        [self.hamming, self.one_error, self.coverage, self.ranking, self.avgprec]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub dataset: String,
    pub cell: usize,
    pub variant: Variant,
    pub noise_pct: f64,
    pub repeat: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Error message when the run failed.
    pub outcome: std::result::Result<Metrics, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub repeats: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            repeats: 10,
            base_seed: 0,
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

impl Protocol {
    /// Seed of repeat `r`: noise, split and config echo all derive from it.
    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        self.base_seed.wrapping_add(repeat as u64)
    }
}

/// Fits `variant` on the training split and returns test-set weights.
pub fn fit_weights(train: &Dataset, variant: Variant, config: &TrainConfig) -> Result<WeightMatrix> {
    let x = train.features.view();
    let y = train.candidates.view();
    match variant {
        Variant::Baseline => {
            config.validate()?;
            Ok(agd_solve(x, y, &config.agd_params(), None)?.weights)
        }
        _ => Ok(fit(x, y, &variant.configure(config))?.weights),
    }
}

/// One repeat of the protocol on a dataset with ground truth.
pub fn run_once(
    ds: &Dataset,
    variant: Variant,
    noise_pct: f64,
    config: &TrainConfig,
    seed: u64,
    train_fraction: f64,
) -> Result<Metrics> {
    let truth = ground_truth(ds)?;
    let noisy = inject_noise(
        truth.view(),
        &NoiseSpec {
            ratio_percent: noise_pct,
            seed,
        },
    )?;
    let (train, test) = split(&ds.with_candidates(noisy)?, train_fraction, seed)?;
    let config = TrainConfig {
        seed,
        ..config.clone()
    };
    let w = fit_weights(&train, variant, &config)?;
    let pred = predict(&w, test.features.view(), default_threshold(ds.q()))?;
    let test_truth = ground_truth(&test)?;
    let r = evaluate(pred.scores.view(), pred.labels.view(), test_truth.view())?;
    Ok(Metrics {
        hamming: r.hamming_loss,
        one_error: r.one_error,
        coverage: r.coverage,
        ranking: r.ranking_loss,
        avgprec: r.average_precision,
    })
}

fn ground_truth(ds: &Dataset) -> Result<&Array2<f64>> {
    ds.ground_truth.as_ref().ok_or_else(|| {
        PmlError::InvalidParameter {
            name: "dataset",
            reason: format!("`{}` has no ground truth labels", ds.name),
        }
    })
}

/// Runs every cell for every repeat on the current rayon pool. Rows come
/// back ordered by cell (in the given order), then repeat.
pub fn run_cells(ds: &Dataset, cells: &[Cell], protocol: &Protocol) -> Result<Vec<RunRow>> {
    ground_truth(ds)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..protocol.repeats).map(move |r| (c, r)))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(c, repeat)| {
            let cell = &cells[c];
            let seed = protocol.repeat_seed(repeat);
            let outcome = run_once(ds, cell.variant, cell.noise_pct, &cell.config, seed, protocol.train_fraction)
                .map_err(|e| {
                    log::warn!(
                        "{} {} noise {}% repeat {repeat} (seed {seed}) failed: {e}",
                        ds.name,
                        cell.variant,
                        cell.noise_pct
                    );
                    e.to_string()
                });
            RunRow {
                dataset: ds.name.clone(),
                cell: c,
                variant: cell.variant,
                noise_pct: cell.noise_pct,
                repeat,
                seed,
                alpha: cell.config.alpha,
                beta: cell.config.beta,
                lambda: cell.config.lambda,
                outcome,
            }
        })
        .collect();
    Ok(rows)
}
