//! Closed forms for the scalar toy problem and exact coverage in finite worlds.
//!
//! The toy program is `min VaR_α(c·x | z)` over `x ∈ [−1, 1]`, whose solution is
//! `+1`, `−1` or the conservative `0` depending on where the conditional
//! quantiles of `c | z` sit relative to zero. With Gaussian conditionals the
//! probability of the conservative answer under the test law has a closed form.
//!
//! [`exact_coverage`] enumerates every calibration multiset drawn from a finite
//! training pmf, so the weighted conformal coverage can be compared to its
//! guarantee without sampling error.

use serde::{Deserialize, Serialize};

use crate::conformal::{score, select_eta, CalibScores};
use crate::error::{Error, Result};
use crate::numerics::{normal_cdf, normal_quantile};
use crate::predictors::{MeanModel, QuantileModel};
use crate::scenarios::{Phase, ShiftKind, ToyScenario};

/// Calibration tuples allowed in [`exact_coverage`].
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Density-ratio weighted calibration with a perfect ratio.
    OodRo,
    /// Robustness over a ball of Gaussian means around the training law.
    WsBall,
}

fn check_level(alpha: f64) -> Result<()> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::Domain(format!("risk level {alpha} outside (0.5, 1)")));
    }
    Ok(())
}

/// Sign rule on a conditional interval: `+1` if its upper end is `≤ 0`,
/// `−1` if its lower end is `≥ 0`, else `0`.
fn sign_rule(lower: f64, upper: f64) -> i8 {
    if upper <= 0.0 {
        1
    } else if lower >= 0.0 {
        -1
    } else {
        0
    }
}

/// Optimal toy decision when the test conditional law of `c | z` is known.
pub fn oracle_toy_decision(z: f64, scn: &ToyScenario, alpha: f64) -> Result<i8> {
    check_level(alpha)?;
    scn.validate()?;
    let q = normal_quantile(alpha)?;
    let (mean, sd) = scn.conditional(z, Phase::Test);
    Ok(sign_rule(mean - sd * q, mean + sd * q))
}

/// Radius of the smallest mean ball around the training law containing the test law.
pub fn wsball_radius(scn: &ToyScenario) -> f64 {
    match scn.kind {
        ShiftKind::Covariate => std::f64::consts::SQRT_2 * scn.shift,
        ShiftKind::Label => {
            let r = scn.sigma1 * scn.sigma1 / scn.cost_variance();
            (1.0 + r * r).sqrt() * scn.shift
        }
    }
}

/// Toy decision of the worst-case-ball method: the training conditional
/// quantiles widened by the ball radius on both sides.
pub fn wsball_toy_decision(z: f64, scn: &ToyScenario, alpha: f64) -> Result<i8> {
    check_level(alpha)?;
    scn.validate()?;
    let q = normal_quantile(alpha)?;
    let (mean, sd) = scn.conditional(z, Phase::Train);
    let r = wsball_radius(scn);
    Ok(sign_rule(mean - sd * q - r, mean + sd * q + r))
}

/// `P(x* = 0)` for `z` drawn from the test marginal.
pub fn prob_conservative(scn: &ToyScenario, alpha: f64, method: Method) -> Result<f64> {
    check_level(alpha)?;
    scn.validate()?;
    let q = normal_quantile(alpha)?;
    // x* = 0 exactly when the conditional centre lies within ±half of zero,
    // and the centre is z plus a fixed offset.
    let (offset, half, phase) = match method {
        Method::OodRo => (scn.conditional(0.0, Phase::Test).0, scn.sigma2 * q, Phase::Test),
        Method::WsBall => (0.0, scn.sigma2 * q + wsball_radius(scn), Phase::Train),
    };
    debug_assert_eq!(scn.conditional(0.0, phase).1, scn.sigma2);
    let centre = scn.z_mean(Phase::Test) + offset;
    let p = normal_cdf((half - centre) / scn.sigma1) - normal_cdf((-half - centre) / scn.sigma1);
    Ok(p.clamp(0.0, 1.0))
}

fn check_pmf(p: &[f64], what: &'static str) -> Result<()> {
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("{what} has a negative or non-finite mass")));
    }
    Ok(())
}

/// `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("supports of size {} and {}", p.len(), q.len())));
    }
    check_pmf(p, "p")?;
    check_pmf(q, "q")?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// A finite joint law of `(z, c)` under training (`p`) and test (`q`).
///
/// Scores are taken against the trivial models `f̂ ≡ 0`, `ĥ ≡ 1`, so the
/// score of a point is `|c|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteWorld {
    points: Vec<(f64, f64)>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl DiscreteWorld {
    pub fn new(points: Vec<(f64, f64)>, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::Empty("world support"));
        }
        if p.len() != k || q.len() != k {
            return Err(Error::Dimension(format!("{k} points but pmfs of size {} and {}", p.len(), q.len())));
        }
        for (pmf, what) in [(&p, "training pmf"), (&q, "test pmf")] {
            check_pmf(pmf, what)?;
            let total: f64 = pmf.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("{what} sums to {total}")));
            }
        }
        if p.contains(&0.0) {
            return Err(Error::Domain("training pmf must charge every point".into()));
        }
        let world = Self { points, p, q };
        let mut s = world.scores()?;
        s.sort_by(f64::total_cmp);
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("world scores must be pairwise distinct".into()));
        }
        Ok(world)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scores(&self) -> Result<Vec<f64>> {
        let f = MeanModel::constant(1, vec![0.0]);
        let h = QuantileModel::constant(1, vec![1.0], 0.5);
        self.points.iter().map(|&(z, c)| score(&[z], &[c], &f, &h)).collect()
    }

    /// True ratio `q / p`.
    pub fn true_ratio(&self) -> Vec<f64> {
        self.q.iter().zip(&self.p).map(|(q, p)| q / p).collect()
    }

    /// Test pmf implied by a weight function, `ŵ p / Σ ŵ p`.
    pub fn estimated_test_pmf(&self, weights: &[f64]) -> Result<Vec<f64>> {
        self.check_weights(weights)?;
        let total: f64 = weights.iter().zip(&self.p).map(|(w, p)| w * p).sum();
        Ok(weights.iter().zip(&self.p).map(|(w, p)| w * p / total).collect())
    }

    fn check_weights(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::Dimension(format!("{} weights for {} points", weights.len(), self.len())));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        Ok(())
    }
}

/// How a test score equal to calibration scores is ranked against them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Equal scores count as covered, as in the calibrated box itself.
    Inclusive,
    /// The test point takes a uniformly random rank among the calibration
    /// copies of its atom, which is the continuous-law setting of the
    /// coverage guarantee.
    Randomized,
}

/// `max ŵ / min ŵ` over the support.
pub fn weight_spread(weights: &[f64]) -> f64 {
    let hi = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = weights.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// `1/(n+1) · ŵ̄/ŵ̲`.
pub fn coverage_band(n_cal: usize, weights: &[f64]) -> f64 {
    weight_spread(weights) / (n_cal + 1) as f64
}

/// Exact `P(c_new ∈ U_α(z_new))` with `n_cal` calibration points drawn from
/// `p`, calibration weights `weights` per support point, and the test point
/// drawn from `q`.
pub fn exact_coverage(world: &DiscreteWorld, n_cal: usize, alpha: f64, weights: &[f64], tie: TiePolicy) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("coverage level {alpha} outside (0,1)")));
    }
    if n_cal == 0 {
        return Err(Error::Empty("calibration sample"));
    }
    world.check_weights(weights)?;
    let k = world.len();
    let tuples = (k as u128).checked_pow(n_cal as u32).unwrap_or(u128::MAX);
    if tuples > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(tuples));
    }

    // Only the score order matters, so atoms are relabelled by rank on a
    // spaced integer grid that leaves room for tie-breaking offsets.
    let raw = world.scores()?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let mut grid = vec![0.0; k];
    for (rank, &i) in order.iter().enumerate() {
        grid[i] = 4.0 * rank as f64 + 2.0;
    }

    // Calibration draws are exchangeable, so summing over count vectors with
    // multinomial mass equals summing over ordered tuples.
    let log_fact: Vec<f64> = (0..=n_cal)
        .scan(0.0, |acc, i| {
            if i > 0 {
                *acc += (i as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let mut total = 0.0;
    let mut counts = vec![0usize; k];
    let mut err = None;
    for_each_composition(&mut counts, 0, n_cal, &mut |counts| {
        if err.is_some() {
            return;
        }
        let mut log_mass = log_fact[n_cal];
        for (j, &nj) in counts.iter().enumerate() {
            log_mass -= log_fact[nj];
            log_mass += nj as f64 * world.p[j].ln();
        }
        match covered_mass(world, &grid, weights, counts, alpha, tie) {
            Ok(c) => total += log_mass.exp() * c,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `Σ_k q_k P(test at atom k is covered | counts)`.
fn covered_mass(world: &DiscreteWorld, grid: &[f64], weights: &[f64], counts: &[usize], alpha: f64, tie: TiePolicy) -> Result<f64> {
    let build = |below_at: Option<(usize, usize)>| -> Result<f64> {
        let mut s = Vec::new();
        let mut w = Vec::new();
        for (j, &nj) in counts.iter().enumerate() {
            for copy in 0..nj {
                let shift = match below_at {
                    Some((atom, below)) if atom == j => {
                        if copy < below {
                            -1.0
                        } else {
                            1.0
                        }
                    }
                    _ => 0.0,
                };
                s.push(grid[j] + shift);
                w.push(weights[j]);
            }
        }
        Ok(select_eta(&CalibScores::new(s, w)?, alpha)?.eta)
    };
    let mut mass = 0.0;
    match tie {
        TiePolicy::Inclusive => {
            let eta = build(None)?;
            for j in 0..world.len() {
                if grid[j] <= eta {
                    mass += world.q[j];
                }
            }
        }
        TiePolicy::Randomized => {
            for j in 0..world.len() {
                if world.q[j] == 0.0 {
                    continue;
                }
                let nj = counts[j];
                let mut hit = 0usize;
                for below in 0..=nj {
                    if grid[j] <= build(Some((j, below)))? {
                        hit += 1;
                    }
                }
                mass += world.q[j] * hit as f64 / (nj + 1) as f64;
            }
        }
    }
    Ok(mass)
}

fn for_each_composition(counts: &mut [usize], at: usize, left: usize, f: &mut impl FnMut(&[usize])) {
    if at + 1 == counts.len() {
        counts[at] = left;
        f(counts);
        return;
    }
    for c in 0..=left {
        counts[at] = c;
        for_each_composition(counts, at + 1, left - c, f);
    }
}
