//! Small feed-forward networks (affine or one hidden layer) with
//! hand-written backpropagation, and the Adam optimiser used to train them.

use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => t.tanh(),
            Activation::Relu => t.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    fn slope(self, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    /// `½ (out − y)²` per output.
    Squared,
    /// Pinball loss `ρ_α(y − out)` per output.
    Pinball { alpha: f64 },
    /// Binary cross-entropy on a single logit output, `y ∈ {0, 1}`.
    Logistic,
}

/// Parameter layout: `[W1 (h×d), b1 (h), W2 (k×h), b2 (k)]` for the hidden
/// architecture and `[W (k×d), b (k)]` for the affine one.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    d_in: usize,
    hidden: Option<usize>,
    activation: Activation,
    d_out: usize,
    pub params: Vec<f64>,
}

impl Net {
    pub fn affine(d_in: usize, d_out: usize) -> Self {
        Self {
            d_in,
            hidden: None,
            activation: Activation::Tanh,
            d_out,
            params: vec![0.0; d_out * d_in + d_out],
        }
    }

    /// One hidden tanh layer, Glorot-uniform initialised.
    pub fn mlp(d_in: usize, hidden: usize, d_out: usize, rng: &mut RngStream) -> Self {
        Self::mlp_with(d_in, hidden, d_out, Activation::Tanh, rng)
    }

    /// One hidden layer; Glorot-uniform for tanh, He-uniform for ReLU.
    pub fn mlp_with(d_in: usize, hidden: usize, d_out: usize, activation: Activation, rng: &mut RngStream) -> Self {
        let mut params = Vec::with_capacity(hidden * d_in + hidden + d_out * hidden + d_out);
        let r1 = match activation {
            Activation::Tanh => (6.0 / (d_in + hidden) as f64).sqrt(),
            Activation::Relu => (6.0 / d_in as f64).sqrt(),
        };
        params.extend((0..hidden * d_in).map(|_| rng.uniform(-r1, r1)));
        params.extend(std::iter::repeat_n(0.0, hidden));
        let r2 = (6.0 / (hidden + d_out) as f64).sqrt();
        params.extend((0..d_out * hidden).map(|_| rng.uniform(-r2, r2)));
        params.extend(std::iter::repeat_n(0.0, d_out));
        Self {
            d_in,
            hidden: Some(hidden),
            activation,
            d_out,
            params,
        }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Output bias slice.
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        let len = self.params.len();
        &mut self.params[len - self.d_out..]
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        let mut scratch = vec![0.0; self.hidden.unwrap_or(0)];
        self.forward_with(&self.params, x, &mut scratch, out);
    }

    fn forward_with(&self, p: &[f64], x: &[f64], hid: &mut [f64], out: &mut [f64]) {
        let (d, k) = (self.d_in, self.d_out);
        match self.hidden {
            None => {
                let (w, b) = p.split_at(k * d);
                for o in 0..k {
                    out[o] = b[o] + dot(&w[o * d..(o + 1) * d], x);
                }
            }
            Some(h) => {
                let (w1, rest) = p.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(k * h);
                for j in 0..h {
                    hid[j] = self.activation.apply(b1[j] + dot(&w1[j * d..(j + 1) * d], x));
                }
                for o in 0..k {
                    out[o] = b2[o] + dot(&w2[o * h..(o + 1) * h], hid);
                }
            }
        }
    }

    /// Mean loss over `rows` of `(x, y)` and its gradient at `p`.
    pub fn loss_and_grad(&self, p: &[f64], x: &Matrix, y: &Matrix, rows: &[usize], loss: Loss) -> (f64, Vec<f64>) {
        let (d, k) = (self.d_in, self.d_out);
        let h = self.hidden.unwrap_or(0);
        let mut grad = vec![0.0; p.len()];
        let mut hid = vec![0.0; h];
        let mut out = vec![0.0; k];
        let mut g_out = vec![0.0; k];
        let mut total = 0.0;
        for &r in rows {
            let xr = x.row(r);
            let yr = y.row(r);
            self.forward_with(p, xr, &mut hid, &mut out);
            for o in 0..k {
                let (l, g) = pointwise(loss, out[o], yr[o]);
                total += l;
                g_out[o] = g;
            }
            match self.hidden {
                None => {
                    let (gw, gb) = grad.split_at_mut(k * d);
                    for o in 0..k {
                        gb[o] += g_out[o];
                        for (gwi, xi) in gw[o * d..(o + 1) * d].iter_mut().zip(xr) {
                            *gwi += g_out[o] * xi;
                        }
                    }
                }
                Some(_) => {
                    let w2 = &p[h * d + h..h * d + h + k * h];
                    let (gw1, rest) = grad.split_at_mut(h * d);
                    let (gb1, rest) = rest.split_at_mut(h);
                    let (gw2, gb2) = rest.split_at_mut(k * h);
                    for o in 0..k {
                        gb2[o] += g_out[o];
                        for j in 0..h {
                            gw2[o * h + j] += g_out[o] * hid[j];
                        }
                    }
                    for j in 0..h {
                        let back: f64 = (0..k).map(|o| g_out[o] * w2[o * h + j]).sum();
                        let pre = back * self.activation.slope(hid[j]);
                        gb1[j] += pre;
                        for (gwi, xi) in gw1[j * d..(j + 1) * d].iter_mut().zip(xr) {
                            *gwi += pre * xi;
                        }
                    }
                }
            }
        }
        let scale = 1.0 / rows.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (total * scale, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss value and derivative with respect to the network output.
fn pointwise(loss: Loss, out: f64, y: f64) -> (f64, f64) {
    match loss {
        Loss::Squared => {
            let e = out - y;
            (0.5 * e * e, e)
        }
        Loss::Pinball { alpha } => {
            let u = y - out;
            if u >= 0.0 {
                (alpha * u, -alpha)
            } else {
                (-(1.0 - alpha) * u, 1.0 - alpha)
            }
        }
        Loss::Logistic => {
            // log(1 + e^out) − y·out, computed stably.
            let softplus = if out > 0.0 {
                out + (-out).exp().ln_1p()
            } else {
                out.exp().ln_1p()
            };
            (softplus - y * out, sigmoid(out) - y)
        }
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// Training schedule shared by every network fit in the crate.
#[derive(Debug, Clone, Copy)]
pub struct Schedule {
    pub epochs: usize,
    pub learning_rate: f64,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// Linearly decay the step size to zero over the run.
    pub decay: bool,
    pub weight_decay: f64,
}

/// Runs Adam over `(x, y)` and returns the final mean training loss.
pub fn train(net: &mut Net, x: &Matrix, y: &Matrix, loss: Loss, sched: Schedule, rng: &mut RngStream) -> f64 {
    let n = x.rows();
    let mut adam = Adam::new(net.params.len());
    let mut order: Vec<usize> = (0..n).collect();
    let batch = sched.batch_size.unwrap_or(n).clamp(1, n.max(1));
    let steps_per_epoch = n.div_ceil(batch);
    let total_steps = (sched.epochs * steps_per_epoch).max(1);
    let mut step = 0;
    for _ in 0..sched.epochs {
        if batch < n {
            rng.shuffle(&mut order);
        }
        for chunk in order.chunks(batch) {
            let (_, mut g) = net.loss_and_grad(&net.params, x, y, chunk, loss);
            if sched.weight_decay > 0.0 {
                for (gi, pi) in g.iter_mut().zip(&net.params) {
                    *gi += sched.weight_decay * pi;
                }
            }
            let lr = if sched.decay {
                sched.learning_rate * (1.0 - step as f64 / total_steps as f64)
            } else {
                sched.learning_rate
            };
            adam.step(&mut net.params, &g, lr);
            step += 1;
        }
    }
    net.loss_and_grad(&net.params, x, y, &order, loss).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_difference_check(net: &Net, x: &Matrix, y: &Matrix, loss: Loss, rng: &mut RngStream) {
        let rows: Vec<usize> = (0..x.rows()).collect();
        for _ in 0..20 {
            let p: Vec<f64> = net.params.iter().map(|v| v + rng.gaussian(0.0, 0.3)).collect();
            let (_, g) = net.loss_and_grad(&p, x, y, &rows, loss);
            let i = rng.below(p.len());
            let h = 1e-6;
            let mut pp = p.clone();
            pp[i] += h;
            let mut pm = p.clone();
            pm[i] -= h;
            let fd = (net.loss_and_grad(&pp, x, y, &rows, loss).0 - net.loss_and_grad(&pm, x, y, &rows, loss).0) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: fd {fd} vs analytic {}", g[i]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngStream::new(3, 0);
        let x = Matrix::from_fn(12, 3, |_, _| rng.gaussian(0.0, 1.0));
        let y2 = Matrix::from_fn(12, 2, |_, _| rng.gaussian(0.0, 1.0));
        let y1 = Matrix::from_fn(12, 1, |i, _| (i % 2) as f64);
        let mlp = Net::mlp(3, 16, 2, &mut rng);
        finite_difference_check(&mlp, &x, &y2, Loss::Squared, &mut rng);
        // Pinball is piecewise linear; away from kinks the derivative is exact.
        finite_difference_check(&mlp, &x, &y2, Loss::Pinball { alpha: 0.8 }, &mut rng);
        let clf = Net::mlp(3, 16, 1, &mut rng);
        finite_difference_check(&clf, &x, &y1, Loss::Logistic, &mut rng);
        // ReLU kinks are hit with probability zero under random perturbations.
        let relu = Net::mlp_with(3, 16, 2, Activation::Relu, &mut rng);
        finite_difference_check(&relu, &x, &y2, Loss::Squared, &mut rng);
        let mut aff = Net::affine(3, 2);
        aff.params.iter_mut().for_each(|p| *p = rng.gaussian(0.0, 1.0));
        finite_difference_check(&aff, &x, &y2, Loss::Squared, &mut rng);
    }

    #[test]
    fn logistic_loss_is_stable() {
        let (l, g) = pointwise(Loss::Logistic, 800.0, 1.0);
        assert!(l.abs() < 1e-12 && g.abs() < 1e-12);
        let (l, _) = pointwise(Loss::Logistic, -800.0, 1.0);
        assert!((l - 800.0).abs() < 1e-9);
    }
}
