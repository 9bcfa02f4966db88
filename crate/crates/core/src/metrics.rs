//! Multi-label evaluation: hamming loss, one-error, coverage, ranking loss
//! and average precision.
//!
//! Ranks are 1-based positions in descending score order with ties broken by
//! the lower label index. Ranking loss gives tied (relevant, irrelevant)
//! pairs half credit. Rows whose label set makes a metric undefined are
//! skipped and counted.

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{PmlError, Result};

/// A per-row average together with the rows it could not be computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowAverage {
    /// Mean over evaluated rows; 0 when every row was skipped.
    pub value: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

impl RowAverage {
    fn from_sum(sum: f64, evaluated: usize, skipped: usize) -> Self {
        let value = if evaluated == 0 { 0.0 } else { sum / evaluated as f64 };
        RowAverage {
            value,
            evaluated,
            skipped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationReport {
    pub hamming_loss: f64,
    pub one_error: f64,
    pub coverage: f64,
    pub ranking_loss: f64,
    pub average_precision: f64,
    pub n_test: usize,
    /// Rows without relevant labels (skipped by one-error, coverage, average precision).
    pub rows_without_relevant: usize,
    /// Rows skipped by ranking loss (all or no labels relevant).
    pub rows_skipped_ranking: usize,
}

fn check(op: &'static str, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(PmlError::ShapeMismatch {
            op,
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

fn relevant(v: f64) -> bool {
    v != 0.0
}

/// Label indices ordered by descending score, ties to the lower index.
fn ranking_order(scores: ArrayView1<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// 1-based rank of every label.
fn ranks(scores: ArrayView1<f64>) -> Vec<usize> {
    let mut r = vec![0; scores.len()];
    for (pos, label) in ranking_order(scores).into_iter().enumerate() {
        r[label] = pos + 1;
    }
    r
}

/// Fraction of mismatched entries.
pub fn hamming_loss(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    check("hamming_loss", pred, truth)?;
    let total = pred.len();
    if total == 0 {
        return Ok(0.0);
    }
    let wrong = pred
        .iter()
        .zip(truth.iter())
        .filter(|(&p, &t)| relevant(p) != relevant(t))
        .count();
    Ok(wrong as f64 / total as f64)
}

pub fn one_error(scores: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<RowAverage> {
    check("one_error", scores, truth)?;
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0, 0);
    for (s, t) in scores.rows().into_iter().zip(truth.rows()) {
        if !t.iter().any(|&v| relevant(v)) {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let top = ranking_order(s)[0];
        if !relevant(t[top]) {
            sum += 1.0;
        }
    }
    Ok(RowAverage::from_sum(sum, evaluated, skipped))
}

pub fn ranking_loss(scores: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<RowAverage> {
    check("ranking_loss", scores, truth)?;
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0, 0);
    for (s, t) in scores.rows().into_iter().zip(truth.rows()) {
        let (rel, irr): (Vec<usize>, Vec<usize>) = (0..t.len()).partition(|&c| relevant(t[c]));
        if rel.is_empty() || irr.is_empty() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let mut bad = 0.0;
        for &r in &rel {
            for &i in &irr {
                if s[r] < s[i] {
                    bad += 1.0;
                } else if s[r] == s[i] {
                    bad += 0.5;
                }
            }
        }
        sum += bad / (rel.len() * irr.len()) as f64;
    }
    Ok(RowAverage::from_sum(sum, evaluated, skipped))
}

/// `(max rank of a relevant label − 1) / q`, averaged over rows.
pub fn coverage(scores: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<RowAverage> {
    check("coverage", scores, truth)?;
    let q = scores.ncols() as f64;
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0, 0);
    for (s, t) in scores.rows().into_iter().zip(truth.rows()) {
        let r = ranks(s);
        let deepest = (0..t.len()).filter(|&c| relevant(t[c])).map(|c| r[c]).max();
        match deepest {
            Some(depth) => {
                evaluated += 1;
                sum += (depth - 1) as f64 / q;
            }
            None => skipped += 1,
        }
    }
    Ok(RowAverage::from_sum(sum, evaluated, skipped))
}

pub fn average_precision(scores: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<RowAverage> {
    check("average_precision", scores, truth)?;
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0, 0);
    for (s, t) in scores.rows().into_iter().zip(truth.rows()) {
        let r = ranks(s);
        let mut rel_ranks: Vec<usize> =
            (0..t.len()).filter(|&c| relevant(t[c])).map(|c| r[c]).collect();
        if rel_ranks.is_empty() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        rel_ranks.sort_unstable();
        // Ranks are distinct, so the k-th smallest relevant rank has exactly
        // k relevant labels at or above it.
        let precision: f64 = rel_ranks
            .iter()
            .enumerate()
            .map(|(k, &rank)| (k + 1) as f64 / rank as f64)
            .sum();
        sum += precision / rel_ranks.len() as f64;
    }
    Ok(RowAverage::from_sum(sum, evaluated, skipped))
}

/// All five metrics; `labels` is the binarized prediction used by hamming loss.
pub fn evaluate(
    scores: ArrayView2<f64>,
    labels: ArrayView2<f64>,
    truth: ArrayView2<f64>,
) -> Result<EvaluationReport> {
    let one = one_error(scores, truth)?;
    let rank = ranking_loss(scores, truth)?;
    Ok(EvaluationReport {
        hamming_loss: hamming_loss(labels, truth)?,
        one_error: one.value,
        coverage: coverage(scores, truth)?.value,
        ranking_loss: rank.value,
        average_precision: average_precision(scores, truth)?.value,
        n_test: truth.nrows(),
        rows_without_relevant: one.skipped,
        rows_skipped_ranking: rank.skipped,
    })
}
