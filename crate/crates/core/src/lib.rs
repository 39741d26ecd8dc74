//! Out-of-distribution robust contextual linear programming.
//!
//! Calibrates covariate-conditional box uncertainty sets from training data
//! drawn under a distribution `P` so that they cover costs drawn under a
//! shifted test distribution `Q`, then solves the resulting robust linear
//! programs.
//!
//! The pipeline has two halves. A mean model `f̂` and a residual-magnitude
//! quantile model `ĥ` give the box shape `f̂(z) ± η·ĥ(z)`; a density-ratio
//! estimate `ŵ = q/p` re-weights held-out calibration residuals so that the
//! scale `η` reaches the target coverage under `Q` rather than `P`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod conformal;
pub mod density_ratio;
pub mod error;
pub mod harness;
pub mod lp;
pub mod net;
pub mod numerics;
pub mod predictors;
pub mod report;
pub mod scenarios;

pub use error::{Error, Result};
