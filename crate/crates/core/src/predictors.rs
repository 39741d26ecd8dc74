//! Mean model `f̂ ≈ E[c|z]` and residual-magnitude quantile model `ĥ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{self, Activation, Loss, Net, Schedule};
use crate::numerics::{order_statistic_quantile, solve_spd, Matrix, RngStream};

/// Smallest width `ĥ` may predict.
pub const WIDTH_FLOOR: f64 = 1e-6;

/// Paired covariates and costs. Test covariate sets carry a zero-width cost block.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub z: Matrix,
    pub c: Matrix,
}

impl Dataset {
    pub fn new(z: Matrix, c: Matrix) -> Result<Self> {
        if z.rows() != c.rows() {
            return Err(Error::Dimension(format!(
                "{} covariate rows but {} cost rows",
                z.rows(),
                c.rows()
            )));
        }
        if z.as_slice().iter().chain(c.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self { z, c })
    }

    pub fn covariates_only(z: Matrix) -> Self {
        let n = z.rows();
        Self {
            z,
            c: Matrix::zeros(n, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.z.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim_z(&self) -> usize {
        self.z.cols()
    }

    pub fn dim_c(&self) -> usize {
        self.c.cols()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            z: Matrix::from_fn(rows.len(), self.dim_z(), |i, j| self.z[(rows[i], j)]),
            c: Matrix::from_fn(rows.len(), self.dim_c(), |i, j| self.c[(rows[i], j)]),
        }
    }

    /// Contiguous slice `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        let rows: Vec<usize> = (start..end).collect();
        self.select(&rows)
    }
}

/// Per-column standardisation.
#[derive(Debug, Clone, PartialEq)]
struct Scaler {
    mean: Vec<f64>,
    std: Vec<f64>,
    /// Multiplier used when mapping back; zero for constant columns.
    spread: Vec<f64>,
}

impl Scaler {
    fn fit(m: &Matrix) -> Self {
        let n = m.rows().max(1) as f64;
        let mean: Vec<f64> = (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| m[(i, j)]).sum::<f64>() / n)
            .collect();
        let spread: Vec<f64> = (0..m.cols())
            .map(|j| {
                let v = (0..m.rows()).map(|i| (m[(i, j)] - mean[j]).powi(2)).sum::<f64>() / n;
                if v > 1e-24 {
                    v.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let std = spread.iter().map(|s| if *s > 0.0 { *s } else { 1.0 }).collect();
        Self { mean, std, spread }
    }

    fn apply(&self, m: &Matrix) -> Matrix {
        Matrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] - self.mean[j]) / self.std[j])
    }

    fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, v)| (v - self.mean[j]) / self.std[j]).collect()
    }
}

/// Pinball loss `ρ_α(u) = α·max(u,0) + (1−α)·max(−u,0)`.
pub fn pinball(u: f64, alpha: f64) -> f64 {
    alpha * u.max(0.0) + (1.0 - alpha) * (-u).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            hidden: 16,
            epochs: 500,
            learning_rate: 0.01,
            batch_size: 64,
            activation: Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeanSpec {
    Ridge { lambda: f64 },
    Mlp(MlpSpec),
}

impl Default for MeanSpec {
    fn default() -> Self {
        MeanSpec::Mlp(MlpSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MeanFit {
    /// `c = intercept + Wᵀ z`, `W` is `d × k`.
    Ridge { w: Matrix, intercept: Vec<f64> },
    Mlp { net: Net, x: Scaler, y: Scaler },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanModel {
    fit: MeanFit,
    d: usize,
    k: usize,
    train_loss: f64,
}

impl MeanModel {
    pub fn dim_in(&self) -> usize {
        self.d
    }

    pub fn dim_out(&self) -> usize {
        self.k
    }

    /// Mean squared error on the training data.
    pub fn train_loss(&self) -> f64 {
        self.train_loss
    }

    /// A model returning `value` everywhere.
    pub fn constant(d: usize, value: Vec<f64>) -> Self {
        let k = value.len();
        Self {
            fit: MeanFit::Ridge {
                w: Matrix::zeros(d, k),
                intercept: value,
            },
            d,
            k,
            train_loss: 0.0,
        }
    }

    /// A linear model `c = intercept + Wᵀ z`.
    pub fn linear(w: Matrix, intercept: Vec<f64>) -> Result<Self> {
        if w.cols() != intercept.len() {
            return Err(Error::Dimension("linear mean model".into()));
        }
        Ok(Self {
            d: w.rows(),
            k: w.cols(),
            fit: MeanFit::Ridge { w, intercept },
            train_loss: 0.0,
        })
    }

    pub fn predict(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.d {
            return Err(Error::Dimension(format!("mean model expects {} inputs, got {}", self.d, z.len())));
        }
        Ok(match &self.fit {
            MeanFit::Ridge { w, intercept } => {
                let mut out = intercept.clone();
                for (i, zi) in z.iter().enumerate() {
                    crate::numerics::axpy(*zi, w.row(i), &mut out);
                }
                out
            }
            MeanFit::Mlp { net, x, y } => {
                let mut out = vec![0.0; self.k];
                net.forward(&x.apply_row(z), &mut out);
                out.iter().enumerate().map(|(o, v)| y.mean[o] + y.spread[o] * v).collect()
            }
        })
    }

    pub fn predict_batch(&self, z: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(z.rows(), self.k);
        for i in 0..z.rows() {
            let p = self.predict(z.row(i))?;
            out.row_mut(i).copy_from_slice(&p);
        }
        Ok(out)
    }
}

pub fn fit_mean(train: &Dataset, spec: MeanSpec, rng: &mut RngStream) -> Result<MeanModel> {
    if train.is_empty() {
        return Err(Error::Empty("mean model training data"));
    }
    let (n, d, k) = (train.len(), train.dim_z(), train.dim_c());
    match spec {
        MeanSpec::Ridge { lambda } => {
            if !(lambda >= 0.0) {
                return Err(Error::Parameter(format!("ridge lambda {lambda}")));
            }
            let xs = Scaler::fit(&train.z);
            let ys = Scaler::fit(&train.c);
            let xc = Matrix::from_fn(n, d, |i, j| train.z[(i, j)] - xs.mean[j]);
            let mut gram = xc.transpose().matmul(&xc)?;
            let jitter = 1e-12 * (0..d).map(|j| gram[(j, j)]).sum::<f64>().max(1.0) / d.max(1) as f64;
            gram.add_diag(lambda + jitter);
            let mut w = Matrix::zeros(d, k);
            for o in 0..k {
                let yc: Vec<f64> = (0..n).map(|i| train.c[(i, o)] - ys.mean[o]).collect();
                let sol = solve_spd(&gram, &xc.tmatvec(&yc))?;
                for j in 0..d {
                    w[(j, o)] = sol[j];
                }
            }
            let intercept = (0..k)
                .map(|o| ys.mean[o] - (0..d).map(|j| xs.mean[j] * w[(j, o)]).sum::<f64>())
                .collect();
            let mut model = MeanModel {
                fit: MeanFit::Ridge { w, intercept },
                d,
                k,
                train_loss: 0.0,
            };
            model.train_loss = mse(&model, train)?;
            Ok(model)
        }
        MeanSpec::Mlp(s) => {
            validate_mlp(&s)?;
            let xs = Scaler::fit(&train.z);
            let ys = Scaler::fit(&train.c);
            let x = xs.apply(&train.z);
            let y = ys.apply(&train.c);
            let mut net = Net::mlp_with(d, s.hidden, k, s.activation, rng);
            net::train(
                &mut net,
                &x,
                &y,
                Loss::Squared,
                Schedule {
                    epochs: s.epochs,
                    learning_rate: s.learning_rate,
                    batch_size: Some(s.batch_size),
                    decay: false,
                    weight_decay: 0.0,
                },
                rng,
            );
            let mut model = MeanModel {
                fit: MeanFit::Mlp { net, x: xs, y: ys },
                d,
                k,
                train_loss: 0.0,
            };
            model.train_loss = mse(&model, train)?;
            if !model.train_loss.is_finite() {
                return Err(Error::NonFinite("mean model training loss"));
            }
            Ok(model)
        }
    }
}

fn validate_mlp(s: &MlpSpec) -> Result<()> {
    if s.hidden == 0 || s.batch_size == 0 || !(s.learning_rate > 0.0) {
        return Err(Error::Parameter(format!("invalid network spec {s:?}")));
    }
    Ok(())
}

/// Mean over samples and outputs of the squared prediction error.
pub fn mse(model: &MeanModel, data: &Dataset) -> Result<f64> {
    let pred = model.predict_batch(&data.z)?;
    let n = (data.len() * data.dim_c()).max(1) as f64;
    Ok(pred.as_slice().iter().zip(data.c.as_slice()).map(|(p, c)| (p - c).powi(2)).sum::<f64>() / n)
}

/// Residuals `r_i = c_i − f̂(z_i)`.
pub fn compute_residuals(data: &Dataset, f: &MeanModel) -> Result<Matrix> {
    if data.dim_z() != f.dim_in() || data.dim_c() != f.dim_out() {
        return Err(Error::Dimension(format!(
            "dataset ({}, {}) vs mean model ({}, {})",
            data.dim_z(),
            data.dim_c(),
            f.dim_in(),
            f.dim_out()
        )));
    }
    let pred = f.predict_batch(&data.z)?;
    Ok(Matrix::from_fn(data.len(), data.dim_c(), |i, j| data.c[(i, j)] - pred[(i, j)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QuantileSpec {
    /// Affine in `z`; `intercept_only` drops the slope.
    Linear {
        #[serde(default)]
        intercept_only: bool,
        #[serde(default = "default_quantile_epochs")]
        epochs: usize,
    },
    Mlp {
        hidden: usize,
        #[serde(default = "default_quantile_epochs")]
        epochs: usize,
        #[serde(default)]
        activation: Activation,
    },
}

fn default_quantile_epochs() -> usize {
    2000
}

impl Default for QuantileSpec {
    fn default() -> Self {
        QuantileSpec::Mlp {
            hidden: 16,
            epochs: default_quantile_epochs(),
            activation: Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileModel {
    net: Net,
    x: Scaler,
    /// Per-output scale applied to the network output.
    scale: Vec<f64>,
    intercept_only: bool,
    alpha: f64,
    floor: f64,
}

impl QuantileModel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim_in(&self) -> usize {
        self.x.mean.len()
    }

    pub fn dim_out(&self) -> usize {
        self.scale.len()
    }

    /// Model predicting `width` everywhere.
    pub fn constant(d: usize, width: Vec<f64>, alpha: f64) -> Self {
        let k = width.len();
        let mut net = Net::affine(d, k);
        net.output_bias_mut().copy_from_slice(&width);
        Self {
            net,
            x: Scaler {
                mean: vec![0.0; d],
                std: vec![1.0; d],
                spread: vec![1.0; d],
            },
            scale: vec![1.0; k],
            intercept_only: true,
            alpha,
            floor: WIDTH_FLOOR,
        }
    }

    /// Predicted widths, floored at `WIDTH_FLOOR`.
    pub fn predict(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim_in() {
            return Err(Error::Dimension(format!(
                "quantile model expects {} inputs, got {}",
                self.dim_in(),
                z.len()
            )));
        }
        let mut out = vec![0.0; self.dim_out()];
        let x = if self.intercept_only {
            vec![0.0; z.len()]
        } else {
            self.x.apply_row(z)
        };
        self.net.forward(&x, &mut out);
        Ok(out
            .iter()
            .zip(&self.scale)
            .map(|(v, s)| (v * s).max(self.floor))
            .collect())
    }
}

/// Fits `ĥ` by minimising `Σ_i Σ_k ρ_α(|r_ik| − ĥ(z_i)_k)` with full-batch
/// Adam whose step size decays linearly to zero.
pub fn fit_quantile(z: &Matrix, abs_residuals: &Matrix, alpha: f64, spec: QuantileSpec, rng: &mut RngStream) -> Result<QuantileModel> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("quantile level {alpha} outside (0,1)")));
    }
    if z.rows() != abs_residuals.rows() {
        return Err(Error::Dimension("quantile fit rows".into()));
    }
    if z.rows() == 0 {
        return Err(Error::Empty("quantile model training data"));
    }
    if abs_residuals.as_slice().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("absolute residuals must be finite and nonnegative".into()));
    }
    let (n, d, k) = (z.rows(), z.cols(), abs_residuals.cols());
    // Pinball loss is positively homogeneous, so fitting on rescaled targets
    // and scaling back is exact.
    let scale: Vec<f64> = (0..k)
        .map(|o| {
            let m = (0..n).map(|i| abs_residuals[(i, o)]).sum::<f64>() / n as f64;
            if m > 1e-300 {
                m
            } else {
                1.0
            }
        })
        .collect();
    let y = Matrix::from_fn(n, k, |i, o| abs_residuals[(i, o)] / scale[o]);
    let xs = Scaler::fit(z);
    let (mut net, epochs, intercept_only, lr) = match spec {
        QuantileSpec::Linear { intercept_only, epochs } => (Net::affine(d, k), epochs, intercept_only, 0.05),
        QuantileSpec::Mlp { hidden, epochs, activation } => {
            if hidden == 0 {
                return Err(Error::Parameter("quantile network needs hidden units".into()));
            }
            (Net::mlp_with(d, hidden, k, activation, rng), epochs, false, 0.05)
        }
    };
    net.output_bias_mut().fill(1.0);
    let x = if intercept_only { Matrix::zeros(n, d) } else { xs.apply(z) };
    net::train(
        &mut net,
        &x,
        &y,
        Loss::Pinball { alpha },
        Schedule {
            epochs,
            learning_rate: lr,
            batch_size: None,
            decay: true,
            weight_decay: 0.0,
        },
        rng,
    );
    polish_output_bias(&mut net, &x, &y, alpha);
    Ok(QuantileModel {
        net,
        x: xs,
        scale,
        intercept_only,
        alpha,
        floor: WIDTH_FLOOR,
    })
}

/// Shifts each output bias to the exact pinball minimiser over constant
/// offsets, the `⌈αn⌉`-th order statistic of the remaining residuals.
fn polish_output_bias(net: &mut Net, x: &Matrix, y: &Matrix, alpha: f64) {
    let k = net.d_out();
    let mut out = vec![0.0; k];
    let mut resid = vec![Vec::with_capacity(x.rows()); k];
    for i in 0..x.rows() {
        net.forward(x.row(i), &mut out);
        for o in 0..k {
            resid[o].push(y[(i, o)] - out[o]);
        }
    }
    let bias = net.output_bias_mut();
    for (o, r) in resid.iter_mut().enumerate() {
        bias[o] += order_statistic_quantile(r, alpha);
    }
}

/// Mean pinball loss of `ĥ` on `(z, |r|)`, per output.
pub fn quantile_loss(h: &QuantileModel, z: &Matrix, abs_residuals: &Matrix) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; abs_residuals.cols()];
    for i in 0..z.rows() {
        let pred = h.predict(z.row(i))?;
        for (o, p) in pred.iter().enumerate() {
            sums[o] += pinball(abs_residuals[(i, o)] - p, h.alpha);
        }
    }
    Ok(sums.into_iter().map(|s| s / z.rows().max(1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinball_values() {
        assert_eq!(pinball(0.0, 0.8), 0.0);
        assert!((pinball(1.0, 0.8) - 0.8).abs() < 1e-15);
        assert!((pinball(-1.0, 0.8) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ridge_recovers_exact_line() {
        let mut rng = RngStream::new(1, 0);
        let z = Matrix::from_fn(50, 1, |i, _| i as f64 / 10.0 - 2.0);
        let c = Matrix::from_fn(50, 1, |i, _| 2.0 * z[(i, 0)]);
        let m = fit_mean(&Dataset::new(z, c).unwrap(), MeanSpec::Ridge { lambda: 0.0 }, &mut rng).unwrap();
        assert!((m.predict(&[1.0]).unwrap()[0] - 2.0).abs() < 1e-6);
        assert!(m.predict(&[0.0]).unwrap()[0].abs() < 1e-6);
    }

    #[test]
    fn constant_target_is_reproduced() {
        let mut rng = RngStream::new(2, 0);
        let z = Matrix::from_fn(40, 3, |_, _| rng.gaussian(0.0, 1.0));
        let c = Matrix::from_fn(40, 1, |_, _| 5.0);
        let data = Dataset::new(z, c).unwrap();
        let m = fit_mean(&data, MeanSpec::Ridge { lambda: 0.1 }, &mut rng).unwrap();
        for i in 0..10 {
            let p = m.predict(&[i as f64, -1.0, 3.0]).unwrap()[0];
            assert!((p - 5.0).abs() < 1e-6);
        }
        let m = fit_mean(&data, MeanSpec::Mlp(MlpSpec { epochs: 50, ..MlpSpec::default() }), &mut rng).unwrap();
        assert!((m.predict(&[0.3, 0.1, -2.0]).unwrap()[0] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let mut rng = RngStream::new(0, 0);
        let empty = Dataset::new(Matrix::zeros(0, 1), Matrix::zeros(0, 1)).unwrap();
        assert!(matches!(fit_mean(&empty, MeanSpec::Ridge { lambda: 1.0 }, &mut rng), Err(Error::Empty(_))));
        assert!(Dataset::new(Matrix::zeros(2, 1), Matrix::zeros(3, 1)).is_err());
        let f = MeanModel::constant(2, vec![1.0]);
        let data = Dataset::new(Matrix::zeros(3, 1), Matrix::zeros(3, 1)).unwrap();
        assert!(compute_residuals(&data, &f).is_err());
        let z = Matrix::zeros(3, 1);
        for alpha in [0.0, 1.0, -0.5] {
            assert!(fit_quantile(&z, &z, alpha, QuantileSpec::default(), &mut rng).is_err());
        }
    }

    #[test]
    fn residual_examples() {
        let data = Dataset::new(Matrix::from_rows(&[vec![0.0]]).unwrap(), Matrix::from_rows(&[vec![3.0]]).unwrap()).unwrap();
        let r = compute_residuals(&data, &MeanModel::constant(1, vec![1.0])).unwrap();
        assert_eq!(r.as_slice(), &[2.0]);
        let r = compute_residuals(&data, &MeanModel::constant(1, vec![3.0])).unwrap();
        assert_eq!(r.as_slice(), &[0.0]);
    }

    #[test]
    fn quantile_constant_target() {
        let mut rng = RngStream::new(4, 0);
        let z = Matrix::from_fn(200, 2, |_, _| rng.gaussian(0.0, 1.0));
        let r = Matrix::from_fn(200, 1, |_, _| 2.0);
        for spec in [
            QuantileSpec::Linear { intercept_only: false, epochs: 2000 },
            QuantileSpec::Mlp { hidden: 16, epochs: 2000, activation: Activation::Tanh },
        ] {
            let h = fit_quantile(&z, &r, 0.8, spec, &mut rng).unwrap();
            for i in 0..20 {
                let p = h.predict(z.row(i)).unwrap()[0];
                assert!((p - 2.0).abs() < 1e-3, "{spec:?}: {p}");
            }
        }
    }

    #[test]
    fn quantile_intercept_only_matches_order_statistic() {
        let mut rng = RngStream::new(5, 0);
        let z = Matrix::zeros(5, 1);
        let r = Matrix::from_vec(5, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let h = fit_quantile(&z, &r, 0.8, QuantileSpec::Linear { intercept_only: true, epochs: 2000 }, &mut rng).unwrap();
        let p = h.predict(&[0.0]).unwrap()[0];
        // Any point of [4, 5] minimises Σ ρ_0.8(r − h).
        assert!((4.0 - 1e-6..=5.0 + 1e-6).contains(&p), "{p}");
    }

    #[test]
    fn widths_respect_floor() {
        let h = QuantileModel::constant(1, vec![-3.0, 0.0, 2.0], 0.8);
        assert_eq!(h.predict(&[0.0]).unwrap(), vec![WIDTH_FLOOR, WIDTH_FLOOR, 2.0]);
    }

    #[test]
    fn half_normal_quantile() {
        let mut rng = RngStream::new(6, 0);
        let n = 10_000;
        let z = Matrix::zeros(n, 1);
        let r = Matrix::from_fn(n, 1, |_, _| rng.gaussian(0.0, 1.0).abs());
        let h = fit_quantile(&z, &r, 0.8, QuantileSpec::Linear { intercept_only: true, epochs: 2000 }, &mut rng).unwrap();
        let p = h.predict(&[0.0]).unwrap()[0];
        let oracle = crate::numerics::normal_quantile(0.9).unwrap();
        assert!((p - oracle).abs() < 0.05, "{p} vs {oracle}");
        let below = (0..n).filter(|&i| r[(i, 0)] <= p).count() as f64 / n as f64;
        assert!((below - 0.8).abs() <= 1.0 / n as f64 + 1e-12, "{below}");
    }

    #[test]
    fn quantile_loss_not_worse_than_best_constant() {
        let mut rng = RngStream::new(7, 0);
        let n = 300;
        let z = Matrix::from_fn(n, 2, |_, _| rng.gaussian(0.0, 1.0));
        let r = Matrix::from_fn(n, 2, |i, o| ((1.0 + z[(i, o)].abs()) * rng.gaussian(0.0, 1.0)).abs());
        for spec in [
            QuantileSpec::Linear { intercept_only: false, epochs: 2000 },
            QuantileSpec::Mlp { hidden: 16, epochs: 2000, activation: Activation::Tanh },
        ] {
            let h = fit_quantile(&z, &r, 0.8, spec, &mut rng).unwrap();
            let achieved = quantile_loss(&h, &z, &r).unwrap();
            for o in 0..2 {
                let mut col: Vec<f64> = (0..n).map(|i| r[(i, o)]).collect();
                let q = order_statistic_quantile(&mut col, 0.8);
                let best = col.iter().map(|v| pinball(v - q, 0.8)).sum::<f64>() / n as f64;
                // Slack 1e-3 per sample on the summed loss.
                assert!(achieved[o] <= best + 1e-3, "{spec:?} output {o}: {} vs {best}", achieved[o]);
            }
        }
    }

    #[test]
    fn mlp_mean_beats_zero_predictor() {
        let mut rng = RngStream::new(8, 0);
        let gen = |n: usize, rng: &mut RngStream| {
            let z = Matrix::from_fn(n, 1, |_, _| rng.uniform(-2.0, 2.0));
            let c = Matrix::from_fn(n, 1, |i, _| (2.0 * z[(i, 0)]).sin() + 1.0 + rng.gaussian(0.0, 0.1));
            Dataset::new(z, c).unwrap()
        };
        let train = gen(500, &mut rng);
        let test = gen(500, &mut rng);
        let m = fit_mean(&train, MeanSpec::Mlp(MlpSpec { epochs: 100, ..MlpSpec::default() }), &mut rng).unwrap();
        let zero = MeanModel::constant(1, vec![0.0]);
        assert!(mse(&m, &test).unwrap() < mse(&zero, &test).unwrap());
        assert!(mse(&m, &test).unwrap() < 0.05);
    }

    #[test]
    fn fits_are_deterministic() {
        let mk = || {
            let mut rng = RngStream::new(9, 0);
            let z = Matrix::from_fn(100, 2, |_, _| rng.gaussian(0.0, 1.0));
            let c = Matrix::from_fn(100, 1, |i, _| z[(i, 0)] - z[(i, 1)]);
            let m = fit_mean(&Dataset::new(z.clone(), c).unwrap(), MeanSpec::Mlp(MlpSpec { epochs: 20, ..MlpSpec::default() }), &mut rng).unwrap();
            m.predict(&[0.5, 0.5]).unwrap()
        };
        assert_eq!(mk(), mk());
    }
}
