//! Regression metrics, whole-set versus top-N reports and error histograms.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureCase;
use crate::math;

/// Default lower bound on a prediction for it to enter the relative error.
pub const DEFAULT_MRE_FLOOR: f64 = 0.5;
pub const DEFAULT_BIN_WIDTH: f64 = 1.0;
pub const DEFAULT_TOP_N: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// Mean of `|y - p| / p` over predictions `p ≥ mre_floor`; absent when
    /// every prediction falls below the floor.
    pub mre: Option<f64>,
    pub mre_excluded: usize,
}

pub fn compute_metrics(predictions: &[f64], labels: &[f64], mre_floor: f64) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("compute_metrics needs at least one case"));
    }
    let n = predictions.len() as f64;
    let (mut sq, mut abs, mut rel, mut counted) = (0.0, 0.0, 0.0, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        let e = (p - y).abs();
        sq += e * e;
        abs += e;
        if p >= mre_floor {
            rel += e / p;
            counted += 1;
        }
    }
    Ok(Metrics {
        rmse: math::sqrt(sq / n),
        mae: abs / n,
        mre: (counted > 0).then(|| rel / counted as f64),
        mre_excluded: predictions.len() - counted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub mask: String,
    pub n_all: usize,
    pub rmse_all: f64,
    pub mae_all: f64,
    pub mre_all: Option<f64>,
    pub n_top: usize,
    pub rmse_top: Option<f64>,
    pub mae_top: Option<f64>,
    pub mre_top: Option<f64>,
    /// Cases left out of `mre_all` by the floor.
    pub mre_excluded: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "model,mask,rmse_all,mae_all,mre_all,rmse_top,mae_top,mre_top,n_all,n_top,mre_excluded";

    /// One CSV row in [`CSV_HEADER`](Self::CSV_HEADER) order; absent values
    /// are left empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{:.6},{:.6},{},{},{},{},{},{},{}",
            self.model,
            self.mask,
            self.rmse_all,
            self.mae_all,
            opt(self.mre_all),
            opt(self.rmse_top),
            opt(self.mae_top),
            opt(self.mre_top),
            self.n_all,
            self.n_top,
            self.mre_excluded
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub predictions: Vec<f64>,
}

/// Scores `predict` on `test` once, then reports metrics over all cases
/// and over the cases whose player is in `top_ids`.
pub fn evaluate_model<F>(
    mut predict: F,
    test: &[FeatureCase],
    top_ids: &BTreeSet<String>,
    mre_floor: f64,
    model: &str,
    mask: &str,
) -> Result<Evaluation>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if test.is_empty() {
        return Err(Error::Empty("evaluate_model needs test cases"));
    }
    let predictions = test.iter().map(|c| predict(&c.features)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<f64> = test.iter().map(|c| c.label).collect();
    let all = compute_metrics(&predictions, &labels, mre_floor)?;

    let (mut top_p, mut top_y) = (Vec::new(), Vec::new());
    for ((c, &p), &y) in test.iter().zip(&predictions).zip(&labels) {
        if top_ids.contains(&c.player_id) {
            top_p.push(p);
            top_y.push(y);
        }
    }
    let top = if top_p.is_empty() {
        None
    } else {
        Some(compute_metrics(&top_p, &top_y, mre_floor)?)
    };

    let report = EvalReport {
        model: model.into(),
        mask: mask.into(),
        n_all: test.len(),
        rmse_all: all.rmse,
        mae_all: all.mae,
        mre_all: all.mre,
        n_top: top_p.len(),
        rmse_top: top.map(|m| m.rmse),
        mae_top: top.map(|m| m.mae),
        mre_top: top.and_then(|m| m.mre),
        mre_excluded: all.mre_excluded,
    };
    Ok(Evaluation { report, predictions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lower: f64,
    pub count: usize,
}

/// Counts errors into `[k·w, (k+1)·w)` bins from zero up to the bin holding
/// the largest error. Empty input gives no bins.
pub fn error_histogram(abs_errors: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::config("bin_width", "must be positive and finite"));
    }
    if abs_errors.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(Error::config("abs_errors", "must be finite and >= 0"));
    }
    // Nudge the quotient so bin edges agree with `k·w ≤ e < (k+1)·w`.
    let bin_of = |e: f64| {
        let mut k = libm::floor(e / bin_width) as usize;
        while k > 0 && k as f64 * bin_width > e {
            k -= 1;
        }
        while (k + 1) as f64 * bin_width <= e {
            k += 1;
        }
        k
    };
    let Some(top) = abs_errors.iter().map(|&e| bin_of(e)).max() else {
        return Ok(Vec::new());
    };
    let mut counts = vec![0usize; top + 1];
    for &e in abs_errors {
        counts[bin_of(e)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            bin_lower: k as f64 * bin_width,
            count,
        })
        .collect())
}
