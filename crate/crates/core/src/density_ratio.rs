//! Density-ratio estimates `ŵ(c, z) ≈ q(c, z)/p(c, z)`.
//!
//! Pointwise kinds (trivial, classifier, Gaussian oracle) evaluate anywhere.
//! Kernel mean matching kinds produce weights only for the samples they were
//! fitted on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{self, sigmoid, Loss, Net, Schedule};
use crate::numerics::{dot, solve_spd, Cholesky, Matrix, RngStream};
use crate::predictors::Dataset;
use crate::scenarios::{ShiftKind, ToyScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioKind {
    Trivial,
    ClsLinear,
    ClsMlp,
    KmmCov,
    KmmLabel,
    Oracle,
}

impl RatioKind {
    pub fn name(&self) -> &'static str {
        match self {
            RatioKind::Trivial => "trivial",
            RatioKind::ClsLinear => "cls-linear",
            RatioKind::ClsMlp => "cls-mlp",
            RatioKind::KmmCov => "kmm-cov",
            RatioKind::KmmLabel => "kmm-label",
            RatioKind::Oracle => "oracle",
        }
    }

    /// Whether weights exist only on the fitted samples.
    pub fn is_sample_bound(&self) -> bool {
        matches!(self, RatioKind::KmmCov | RatioKind::KmmLabel)
    }
}

/// Truncation bounds `0 < lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Clip {
    fn default() -> Self {
        Self { lo: 0.05, hi: 20.0 }
    }
}

impl Clip {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let c = Self { lo, hi };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi.is_finite()) {
            return Err(Error::Parameter(format!("clip bounds [{}, {}] invalid", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn apply(&self, w: f64) -> f64 {
        w.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Trivial,
    Classifier {
        net: Net,
        mean: Vec<f64>,
        std: Vec<f64>,
        /// `log(N/M)`, undoing the pooled class imbalance.
        log_prior: f64,
    },
    Sampled {
        z: Matrix,
        weights: Vec<f64>,
    },
    Oracle(ToyScenario),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioModel {
    kind: RatioKind,
    repr: Repr,
    clip: Clip,
}

impl RatioModel {
    pub fn kind(&self) -> RatioKind {
        self.kind
    }

    pub fn clip(&self) -> Clip {
        self.clip
    }

    /// Unclipped log-ratio for pointwise kinds.
    pub fn log_ratio(&self, z: &[f64], c: &[f64]) -> Result<f64> {
        match &self.repr {
            Repr::Trivial => Ok(0.0),
            Repr::Classifier {
                net,
                mean,
                std,
                log_prior,
            } => {
                if z.len() != mean.len() {
                    return Err(Error::Dimension(format!(
                        "classifier expects {} covariates, got {}",
                        mean.len(),
                        z.len()
                    )));
                }
                let x: Vec<f64> = z.iter().zip(mean.iter().zip(std)).map(|(v, (m, s))| (v - m) / s).collect();
                let mut out = [0.0];
                net.forward(&x, &mut out);
                Ok(out[0] + log_prior)
            }
            Repr::Oracle(scn) => {
                let (v, s) = (scn.shift, scn.sigma1 * scn.sigma1);
                Ok(match scn.kind {
                    ShiftKind::Covariate => {
                        let z0 = *z.first().ok_or(Error::Dimension("oracle needs z".into()))?;
                        (2.0 * z0 * v - v * v) / (2.0 * s)
                    }
                    ShiftKind::Label => {
                        let c0 = *c.first().ok_or(Error::Dimension("oracle needs c".into()))?;
                        (2.0 * c0 * v - v * v) / (2.0 * scn.cost_variance())
                    }
                })
            }
            Repr::Sampled { .. } => Err(Error::Domain(
                "kernel mean matching weights exist only on fitted samples".into(),
            )),
        }
    }

    /// Clipped weight at a single point.
    pub fn weight(&self, z: &[f64], c: &[f64]) -> Result<f64> {
        let w = self.log_ratio(z, c)?.exp();
        if w.is_nan() {
            return Err(Error::NonFinite("density ratio"));
        }
        Ok(self.clip.apply(w))
    }

    /// Clipped weights for every row of `data`.
    pub fn weights(&self, data: &Dataset) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Sampled { z, weights } => {
                if &data.z != z {
                    return Err(Error::Domain(
                        "kernel mean matching weights requested on samples they were not fitted on".into(),
                    ));
                }
                Ok(weights.iter().map(|w| self.clip.apply(*w)).collect())
            }
            _ => {
                let empty: [f64; 0] = [];
                (0..data.len())
                    .map(|i| {
                        let c = if data.dim_c() > 0 { data.c.row(i) } else { &empty[..] };
                        self.weight(data.z.row(i), c)
                    })
                    .collect()
            }
        }
    }

    /// Unclipped fitted weights of a kernel mean matching model.
    pub fn fitted_weights(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Sampled { weights, .. } => Some(weights),
            _ => None,
        }
    }
}

pub fn trivial_ratio() -> RatioModel {
    RatioModel {
        kind: RatioKind::Trivial,
        repr: Repr::Trivial,
        clip: Clip::default(),
    }
}

/// Exact `q/p` for the Gaussian toy worlds.
pub fn gaussian_oracle_ratio(scn: ToyScenario) -> Result<RatioModel> {
    scn.validate()?;
    Ok(RatioModel {
        kind: RatioKind::Oracle,
        repr: Repr::Oracle(scn),
        clip: Clip {
            lo: f64::MIN_POSITIVE,
            hi: f64::MAX,
        },
    })
}

pub fn clip_weights(model: &RatioModel, lo: f64, hi: f64) -> Result<RatioModel> {
    let clip = Clip::new(lo, hi)?;
    Ok(RatioModel {
        clip,
        ..model.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClassifierSpec {
    Linear,
    Mlp { hidden: usize, epochs: usize },
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::Mlp { hidden: 16, epochs: 200 }
    }
}

/// Probabilistic-classification ratio `ŵ = (N/M)·p̂/(1 − p̂)`, where `p̂` is
/// the fitted probability that a covariate came from the test sample.
pub fn fit_classifier_ratio(train_z: &Matrix, test_z: &Matrix, spec: ClassifierSpec, clip: Clip, rng: &mut RngStream) -> Result<RatioModel> {
    clip.validate()?;
    if train_z.rows() == 0 || test_z.rows() == 0 {
        return Err(Error::Empty("classifier covariate sample"));
    }
    if train_z.cols() != test_z.cols() {
        return Err(Error::Dimension("train and test covariates differ in dimension".into()));
    }
    let (n, m, d) = (train_z.rows(), test_z.rows(), train_z.cols());
    let pooled = Matrix::from_fn(n + m, d, |i, j| if i < n { train_z[(i, j)] } else { test_z[(i - n, j)] });
    let labels = Matrix::from_fn(n + m, 1, |i, _| if i < n { 0.0 } else { 1.0 });
    let (mean, std) = column_stats(&pooled);
    let x = Matrix::from_fn(n + m, d, |i, j| (pooled[(i, j)] - mean[j]) / std[j]);
    let net = match spec {
        ClassifierSpec::Linear => logistic_irls(&x, labels.as_slice(), 1e-6)?,
        ClassifierSpec::Mlp { hidden, epochs } => {
            if hidden == 0 {
                return Err(Error::Parameter("classifier needs hidden units".into()));
            }
            let mut net = Net::mlp(d, hidden, 1, rng);
            let prior = (m as f64 / n as f64).ln();
            net.output_bias_mut()[0] = prior;
            net::train(
                &mut net,
                &x,
                &labels,
                Loss::Logistic,
                Schedule {
                    epochs,
                    learning_rate: 0.01,
                    batch_size: Some(64),
                    decay: false,
                    weight_decay: 1e-4,
                },
                rng,
            );
            net
        }
    };
    if net.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("classifier parameters"));
    }
    Ok(RatioModel {
        kind: match spec {
            ClassifierSpec::Linear => RatioKind::ClsLinear,
            ClassifierSpec::Mlp { .. } => RatioKind::ClsMlp,
        },
        repr: Repr::Classifier {
            net,
            mean,
            std,
            log_prior: (n as f64 / m as f64).ln(),
        },
        clip,
    })
}

fn column_stats(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows() as f64;
    let mean: Vec<f64> = (0..m.cols()).map(|j| (0..m.rows()).map(|i| m[(i, j)]).sum::<f64>() / n).collect();
    let std = (0..m.cols())
        .map(|j| {
            let v = (0..m.rows()).map(|i| (m[(i, j)] - mean[j]).powi(2)).sum::<f64>() / n;
            if v > 1e-24 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

/// Ridge-stabilised logistic regression by Newton / iteratively reweighted
/// least squares.
fn logistic_irls(x: &Matrix, y: &[f64], ridge: f64) -> Result<Net> {
    let (n, d) = (x.rows(), x.cols());
    let p = d + 1;
    let mut beta = vec![0.0; p];
    let row = |i: usize| -> Vec<f64> {
        let mut r = x.row(i).to_vec();
        r.push(1.0);
        r
    };
    for _ in 0..100 {
        let mut hess = Matrix::zeros(p, p);
        let mut grad = vec![0.0; p];
        for i in 0..n {
            let xi = row(i);
            let mu = sigmoid(dot(&xi, &beta));
            let wt = (mu * (1.0 - mu)).max(1e-12);
            for a in 0..p {
                grad[a] += (mu - y[i]) * xi[a];
                for b in 0..p {
                    hess[(a, b)] += wt * xi[a] * xi[b];
                }
            }
        }
        for a in 0..p {
            grad[a] += ridge * beta[a];
        }
        hess.add_diag(ridge);
        let step = solve_spd(&hess, &grad)?;
        let mut change = 0.0f64;
        for a in 0..p {
            beta[a] -= step[a];
            change = change.max(step[a].abs());
        }
        if change < 1e-10 {
            break;
        }
    }
    let mut net = Net::affine(d, 1);
    net.params.copy_from_slice(&beta);
    Ok(net)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of the positive pairwise Euclidean distances between rows, using
/// at most 1000 evenly strided rows.
pub fn median_bandwidth(x: &Matrix) -> Result<f64> {
    let stride = x.rows().div_ceil(1000).max(1);
    let rows: Vec<usize> = (0..x.rows()).step_by(stride).collect();
    let mut d = Vec::with_capacity(rows.len() * rows.len() / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let v = sq_dist(x.row(i), x.row(j)).sqrt();
            if v > 0.0 {
                d.push(v);
            }
        }
    }
    if d.is_empty() {
        return Err(Error::Domain("no positive pairwise distance for the bandwidth heuristic".into()));
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    Ok(*m)
}

/// Gaussian Gram matrix `exp(−‖a_i − b_j‖² / (2σ²))`.
pub fn gaussian_gram(a: &Matrix, b: &Matrix, bandwidth: f64) -> Result<Matrix> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Parameter(format!("kernel bandwidth {bandwidth} must be positive")));
    }
    if a.cols() != b.cols() {
        return Err(Error::Dimension("kernel inputs differ in dimension".into()));
    }
    let g = 1.0 / (2.0 * bandwidth * bandwidth);
    Ok(Matrix::from_fn(a.rows(), b.rows(), |i, j| (-g * sq_dist(a.row(i), b.row(j))).exp()))
}

/// Kernel matrices for kernel mean matching on `N` training and `M` test samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrices {
    /// `K` over training covariates, `N × N`.
    pub k: Matrix,
    /// `K_te` between training and test covariates, `N × M`.
    pub k_te: Matrix,
    /// `H` over training costs, present for label shift.
    pub h: Option<Matrix>,
    pub bandwidth_z: f64,
    pub bandwidth_c: Option<f64>,
}

impl KernelMatrices {
    /// Bandwidths default to the median heuristic (covariate bandwidth over
    /// the pooled covariates).
    pub fn build(train_z: &Matrix, test_z: &Matrix, train_c: Option<&Matrix>, bandwidth_z: Option<f64>, bandwidth_c: Option<f64>) -> Result<Self> {
        if train_z.rows() < 2 || test_z.rows() < 2 {
            return Err(Error::Parameter("kernel mean matching needs at least two samples per side".into()));
        }
        let bw_z = match bandwidth_z {
            Some(b) => b,
            None => {
                let pooled = Matrix::from_fn(train_z.rows() + test_z.rows(), train_z.cols(), |i, j| {
                    if i < train_z.rows() {
                        train_z[(i, j)]
                    } else {
                        test_z[(i - train_z.rows(), j)]
                    }
                });
                median_bandwidth(&pooled)?
            }
        };
        let k = gaussian_gram(train_z, train_z, bw_z)?;
        let k_te = gaussian_gram(train_z, test_z, bw_z)?;
        let (h, bw_c) = match train_c {
            Some(c) => {
                if c.rows() != train_z.rows() {
                    return Err(Error::Dimension("training costs and covariates differ in rows".into()));
                }
                let bw = match bandwidth_c {
                    Some(b) => b,
                    None => median_bandwidth(c)?,
                };
                (Some(gaussian_gram(c, c, bw)?), Some(bw))
            }
            None => (None, None),
        };
        Ok(Self {
            k,
            k_te,
            h,
            bandwidth_z: bw_z,
            bandwidth_c: bw_c,
        })
    }

    pub fn n(&self) -> usize {
        self.k.rows()
    }

    pub fn m(&self) -> usize {
        self.k_te.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmmOptions {
    /// Weight cap `B`.
    pub cap: f64,
    /// Mean slack `ε`; `None` uses `1/√N`.
    pub mean_slack: Option<f64>,
    /// Ridge `λ` for the label-shift operator; `None` uses `1e-3·N`.
    pub lambda: Option<f64>,
    pub max_iter: usize,
}

impl Default for KmmOptions {
    fn default() -> Self {
        Self {
            cap: 20.0,
            mean_slack: None,
            lambda: None,
            max_iter: 2000,
        }
    }
}

/// Weights and the objective after each projected-gradient iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct KmmFit {
    pub weights: Vec<f64>,
    pub objective: Vec<f64>,
}

/// Euclidean projection onto `{0 ≤ w ≤ cap, |mean(w) − 1| ≤ slack}`.
///
/// The projection has the form `clip(v − τ, 0, cap)` for a scalar `τ`, found
/// by bisection when the plain box clip violates the mean band.
pub fn project_kmm(v: &[f64], cap: f64, slack: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let mean_at = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, cap)).sum::<f64>() / n;
    if cap <= 1.0 - slack {
        return vec![cap; v.len()];
    }
    let m0 = mean_at(0.0);
    let target = if m0 > 1.0 + slack {
        1.0 + slack
    } else if m0 < 1.0 - slack {
        1.0 - slack
    } else {
        return v.iter().map(|x| x.clamp(0.0, cap)).collect();
    };
    let lo0 = v.iter().cloned().fold(f64::INFINITY, f64::min) - cap;
    let hi0 = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    v.iter().map(|x| (x - 0.5 * (lo + hi)).clamp(0.0, cap)).collect()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn top_eigenvalue(q: &Matrix) -> f64 {
    let n = q.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = q.matvec(&v);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= 1e-10 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Row-sum bound guards against an underestimate from a poor start.
    let gersh = (0..n).map(|i| q.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    (1.05 * lambda).min(gersh).max(lambda)
}

/// Minimises `(1/N²) wᵀQw − (2/(NM)) wᵀg` over the KMM feasible set by
/// projected gradient with step `1/L`, starting from `w ≡ 1`.
fn kmm_quadratic(q: &Matrix, g: &[f64], m: usize, opts: &KmmOptions) -> Result<KmmFit> {
    let n = q.rows();
    let nf = n as f64;
    let slack = opts.mean_slack.unwrap_or(1.0 / nf.sqrt());
    if !(opts.cap > 0.0) || !(slack >= 0.0) || opts.cap < 1.0 - slack {
        return Err(Error::Parameter(format!(
            "weight cap {} and mean slack {slack} leave no feasible weights",
            opts.cap
        )));
    }
    let a = 1.0 / (nf * nf);
    let b = 2.0 / (nf * m as f64);
    let objective = |w: &[f64], qw: &[f64]| a * dot(w, qw) - b * dot(w, g);
    let lip = 2.0 * a * top_eigenvalue(q);
    let mut w = project_kmm(&vec![1.0; n], opts.cap, slack);
    let mut qw = q.matvec(&w);
    let mut trace = vec![objective(&w, &qw)];
    if lip <= 0.0 {
        return Ok(KmmFit { weights: w, objective: trace });
    }
    let step = 1.0 / lip;
    for _ in 0..opts.max_iter {
        let v: Vec<f64> = (0..n).map(|i| w[i] - step * (2.0 * a * qw[i] - b * g[i])).collect();
        let next = project_kmm(&v, opts.cap, slack);
        let moved = next.iter().zip(&w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        w = next;
        qw = q.matvec(&w);
        trace.push(objective(&w, &qw));
        if moved < 1e-10 {
            break;
        }
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("kernel mean matching weights"));
    }
    Ok(KmmFit { weights: w, objective: trace })
}

/// Covariate-shift KMM on precomputed kernels.
pub fn kmm_covariate_weights(kernels: &KernelMatrices, opts: &KmmOptions) -> Result<KmmFit> {
    let g: Vec<f64> = (0..kernels.n()).map(|i| kernels.k_te.row(i).iter().sum()).collect();
    kmm_quadratic(&kernels.k, &g, kernels.m(), opts)
}

/// Label-shift KMM: with `Bm = (H + λI)⁻¹H` the loss is
/// `(1/N²) wᵀBmᵀK Bm w − (2/(NM)) wᵀBmᵀK_te·1`.
pub fn kmm_label_weights(kernels: &KernelMatrices, opts: &KmmOptions) -> Result<KmmFit> {
    let h = kernels
        .h
        .as_ref()
        .ok_or_else(|| Error::Parameter("label-shift KMM needs a cost kernel".into()))?;
    let n = kernels.n();
    let lambda = opts.lambda.unwrap_or(1e-3 * n as f64);
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("ridge λ = {lambda} must be positive")));
    }
    let mut reg = h.clone();
    reg.add_diag(lambda);
    let bm = Cholesky::factor(&reg)?.solve_matrix(h)?;
    let q = bm.transpose().matmul(&kernels.k)?.matmul(&bm)?;
    let q = Matrix::from_fn(n, n, |i, j| 0.5 * (q[(i, j)] + q[(j, i)]));
    let rowsum: Vec<f64> = (0..n).map(|i| kernels.k_te.row(i).iter().sum()).collect();
    let g = bm.tmatvec(&rowsum);
    kmm_quadratic(&q, &g, kernels.m(), opts)
}

pub fn fit_kmm_covariate(train_z: &Matrix, test_z: &Matrix, bandwidth: Option<f64>, opts: &KmmOptions, clip: Clip) -> Result<RatioModel> {
    clip.validate()?;
    let kernels = KernelMatrices::build(train_z, test_z, None, bandwidth, None)?;
    let fit = kmm_covariate_weights(&kernels, opts)?;
    Ok(RatioModel {
        kind: RatioKind::KmmCov,
        repr: Repr::Sampled {
            z: train_z.clone(),
            weights: fit.weights,
        },
        clip,
    })
}

pub fn fit_kmm_label(train: &Dataset, test_z: &Matrix, opts: &KmmOptions, clip: Clip) -> Result<RatioModel> {
    clip.validate()?;
    let kernels = KernelMatrices::build(&train.z, test_z, Some(&train.c), None, None)?;
    let fit = kmm_label_weights(&kernels, opts)?;
    Ok(RatioModel {
        kind: RatioKind::KmmLabel,
        repr: Repr::Sampled {
            z: train.z.clone(),
            weights: fit.weights,
        },
        clip,
    })
}
