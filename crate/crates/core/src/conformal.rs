//! Weighted conformal calibration of the box scale `η`.
//!
//! A cost `c` lies in the box `f̂(z) ± η·ĥ(z)` exactly when its score
//! `max_k |c_k − f̂(z)_k| / ĥ(z)_k` is at most `η`, so calibration reduces to
//! a weighted quantile of scalar scores.

use serde::{Deserialize, Serialize};

use crate::density_ratio::RatioModel;
use crate::error::{Error, Result};
use crate::lp::BoxSet;
use crate::predictors::{Dataset, MeanModel, QuantileModel};

/// Calibration scores with their density-ratio weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibScores {
    scores: Vec<f64>,
    weights: Vec<f64>,
}

impl CalibScores {
    pub fn new(scores: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if scores.len() != weights.len() {
            return Err(Error::Dimension(format!("{} scores but {} weights", scores.len(), weights.len())));
        }
        if scores.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Domain("scores must be finite and nonnegative".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        Ok(Self { scores, weights })
    }

    /// Unit weights.
    pub fn unweighted(scores: Vec<f64>) -> Result<Self> {
        let n = scores.len();
        Self::new(scores, vec![1.0; n])
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Smallest `η` whose box at `z` contains `c`.
pub fn score(z: &[f64], c: &[f64], f: &MeanModel, h: &QuantileModel) -> Result<f64> {
    let mean = f.predict(z)?;
    let width = h.predict(z)?;
    if c.len() != mean.len() || c.len() != width.len() {
        return Err(Error::Dimension(format!(
            "cost has {} entries, models emit {} and {}",
            c.len(),
            mean.len(),
            width.len()
        )));
    }
    Ok(c.iter()
        .zip(mean.iter().zip(&width))
        .map(|(ck, (mk, hk))| (ck - mk).abs() / hk)
        .fold(0.0, f64::max))
}

/// Scores of every calibration row, weighted by `ratio`.
pub fn calib_scores(d2: &Dataset, f: &MeanModel, h: &QuantileModel, ratio: &RatioModel) -> Result<CalibScores> {
    if d2.is_empty() {
        return Err(Error::Empty("calibration data"));
    }
    let scores = (0..d2.len())
        .map(|i| score(d2.z.row(i), d2.c.row(i), f, h))
        .collect::<Result<Vec<_>>>()?;
    CalibScores::new(scores, ratio.weights(d2)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub eta: f64,
    pub alpha: f64,
}

/// Minimal calibration score `η` with `Σ ŵ_i 1{η̃_i ≤ η} / Σ ŵ_j ≥ α`.
pub fn select_eta(scores: &CalibScores, alpha: f64) -> Result<CalibrationResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("coverage level {alpha} outside (0,1)")));
    }
    if scores.is_empty() {
        return Err(Error::Empty("calibration scores"));
    }
    let total: f64 = scores.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("calibration weights sum to zero".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores.scores[a].total_cmp(&scores.scores[b]));
    let mut acc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores.scores[order[i]];
        // Equal scores enter the coverage sum together.
        while i < order.len() && scores.scores[order[i]] == s {
            acc += scores.weights[order[i]];
            i += 1;
        }
        if acc / total >= alpha {
            return Ok(CalibrationResult { eta: s, alpha });
        }
    }
    Ok(CalibrationResult {
        eta: scores.scores[order[order.len() - 1]],
        alpha,
    })
}

/// `[f̂(z) − η·ĥ(z), f̂(z) + η·ĥ(z)]`.
pub fn uncertainty_box(z: &[f64], f: &MeanModel, h: &QuantileModel, calib: &CalibrationResult) -> Result<BoxSet> {
    let mean = f.predict(z)?;
    let width = h.predict(z)?;
    if mean.len() != width.len() {
        return Err(Error::Dimension("mean and quantile models disagree on output size".into()));
    }
    let half: Vec<f64> = width.iter().map(|w| calib.eta * w).collect();
    BoxSet::new(
        mean.iter().zip(&half).map(|(m, r)| m - r).collect(),
        mean.iter().zip(&half).map(|(m, r)| m + r).collect(),
    )
}

/// Fraction of rows whose cost lies in its box.
pub fn empirical_coverage(eval: &Dataset, boxes: &[BoxSet]) -> Result<f64> {
    if eval.len() != boxes.len() {
        return Err(Error::Dimension(format!("{} rows but {} boxes", eval.len(), boxes.len())));
    }
    if eval.is_empty() {
        return Err(Error::Empty("coverage evaluation data"));
    }
    let hit = (0..eval.len()).filter(|&i| boxes[i].contains(eval.c.row(i))).count();
    Ok(hit as f64 / eval.len() as f64)
}
