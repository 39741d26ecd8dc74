//! Dense linear algebra, Gaussian special functions and seeded sampling.
//!
//! Everything here is small and dense: the largest systems solved are the
//! KMM regularised Gram systems (a few hundred rows) and ridge normal
//! equations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data; rejects non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`.
    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    let (src, dst) = (other.row(k), i * other.cols);
                    for (j, &b) in src.iter().enumerate() {
                        out.data[dst + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add_diag(&mut self, lambda: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += lambda;
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a·x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(m: &Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Dimension("cholesky of a non-square matrix".into()));
        }
        let n = m.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.l.rows;
        if rhs.len() != n {
            return Err(Error::Dimension(format!("rhs length {} vs {n}", rhs.len())));
        }
        let l = &self.l;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let s = dot(&l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        Ok(y)
    }

    /// Solves `M X = R` column by column.
    pub fn solve_matrix(&self, rhs: &Matrix) -> Result<Matrix> {
        let rt = rhs.transpose();
        let mut out = Matrix::zeros(rt.rows, rt.cols);
        for j in 0..rt.rows {
            let col = self.solve(rt.row(j))?;
            out.row_mut(j).copy_from_slice(&col);
        }
        Ok(out.transpose())
    }
}

/// Solves `M x = rhs` for symmetric positive definite `M` via Cholesky.
pub fn solve_spd(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Cholesky::factor(m)?.solve(rhs)
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail `1 − Φ(x)` for `x ≥ 0`, accurate in relative terms far into the tail.
fn upper_tail(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 3.0 {
        0.5 - central_half(x)
    } else {
        // Continued fraction Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + …)))),
        // evaluated with modified Lentz.
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64;
            d = x + a * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = x + a / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        normal_pdf(x) / f
    }
}

/// `Φ(x) − 1/2` from the Taylor series `φ(x)·(x + x³/3 + x⁵/15 + …)`.
fn central_half(x: f64) -> f64 {
    let q = x * x;
    let mut term = x;
    let mut sum = x;
    let mut i = 1.0;
    loop {
        i += 2.0;
        term *= q / i;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum * normal_pdf(x)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        if x.is_infinite() {
            1.0
        } else if x < 3.0 {
            0.5 + central_half(x)
        } else {
            1.0 - upper_tail(x)
        }
    } else if x.is_infinite() {
        0.0
    } else {
        upper_tail(-x)
    }
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
///
/// A rational initial guess (Acklam's coefficients) is refined with Halley
/// steps against [`normal_cdf`], which brings the roundtrip error down to
/// float rounding.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal_quantile needs p in (0,1), got {p}")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let t = (-2.0 * q.ln()).sqrt();
        (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    };
    let mut x = if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    for _ in 0..3 {
        // Work with the smaller tail to keep the residual relative.
        let e = if x <= 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - upper_tail(x)
        };
        let u = e / normal_pdf(x);
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Seeded random stream. Equal `(seed, index)` pairs yield identical draws;
/// distinct indices select disjoint ChaCha streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// An independent stream derived from this one's seed.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(self.seed, index)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.rng.gen()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.rng);
    }

    pub fn gaussian(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.rng.sample::<f64, _>(rand_distr::StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.gen::<f64>()
    }
}

/// Distributions offered by [`sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Gaussian { mean: f64, variance: f64 },
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64 },
}

pub fn sample(dist: Dist, rng: &mut RngStream) -> Result<f64> {
    match dist {
        Dist::Gaussian { mean, variance } => {
            if !(variance >= 0.0) {
                return Err(Error::Parameter("gaussian: negative variance".into()));
            }
            let n = Normal::new(mean, variance.sqrt())
                .map_err(|e| Error::Parameter(format!("gaussian: {e}")))?;
            Ok(n.sample(&mut rng.rng))
        }
        Dist::Uniform { lo, hi } => {
            if !(lo <= hi) {
                return Err(Error::Parameter(format!("uniform: a={lo} > b={hi}")));
            }
            if lo == hi {
                return Ok(lo);
            }
            Ok(Uniform::new(lo, hi).sample(&mut rng.rng))
        }
        Dist::Bernoulli { p } => {
            let b = Bernoulli::new(p).map_err(|e| Error::Parameter(format!("bernoulli: {e}")))?;
            Ok(if b.sample(&mut rng.rng) { 1.0 } else { 0.0 })
        }
    }
}

/// Fills a `n × d` matrix with independent `N(mean, std²)` draws.
pub fn gaussian_matrix(n: usize, d: usize, mean: f64, std: f64, rng: &mut RngStream) -> Matrix {
    Matrix::from_fn(n, d, |_, _| rng.gaussian(mean, std))
}

/// Empirical quantile by the `⌈level·n⌉`-th order statistic.
pub fn order_statistic_quantile(values: &mut [f64], level: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let k = ((level * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [-12, x]; independent of the series/fraction code.
    fn cdf_by_quadrature(x: f64) -> f64 {
        let a = -12.0;
        let n = 20_000;
        let h = (x - a) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(a) + f(x);
        for i in 1..n {
            let t = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_matches_quadrature() {
        for &x in &[-6.0, -3.5, -2.9, -1.0, 0.0, 0.3, 0.8416, 2.0, 3.0, 3.1, 5.0] {
            let q = cdf_by_quadrature(x);
            assert!((normal_cdf(x) - q).abs() < 1e-10, "x={x}: {} vs {q}", normal_cdf(x));
        }
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(0.8416) - 0.8).abs() < 1e-4);
        let t = normal_cdf(-8.0);
        assert!(t > 0.0 && t < 1e-14);
        // Known value Φ(-8) = 6.22096057427178e-16.
        assert!((t / 6.220_960_574_271_78e-16 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cdf_strictly_increasing() {
        // Above x≈5 neighbouring values collapse onto the same double near 1.
        let mut prev = 0.0;
        for i in 0..=1300 {
            let x = -8.0 + i as f64 * 0.01;
            let v = normal_cdf(x);
            assert!(v > prev && v < 1.0, "x={x}");
            prev = v;
        }
        for i in 0..=300 {
            let x = 5.0 + i as f64 * 0.01;
            let v = normal_cdf(x);
            assert!(v >= prev && v <= 1.0, "x={x}");
            prev = v;
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        // Bisection oracle on the cdf.
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < 0.8 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let q = normal_quantile(0.8).unwrap();
        assert!((q - lo).abs() < 1e-12);
        assert!((q - 0.8416).abs() < 1e-3);
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err());
        }
    }

    #[test]
    fn quantile_roundtrip() {
        for i in 1..=99 {
            let p = i as f64 / 100.0;
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() < 1e-8, "p={p}");
        }
        for p in [1e-10, 1e-5, 0.02, 0.999_99] {
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) / p - 1.0).abs() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn spd_examples() {
        let x = solve_spd(&Matrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![3.0, 4.0]);
        let x = solve_spd(&Matrix::from_diag(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(solve_spd(&bad, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn spd_residuals_on_random_instances() {
        let mut rng = RngStream::new(7, 0);
        for trial in 0..100 {
            let n = 1 + trial % 50;
            let g = gaussian_matrix(n, n, 0.0, 1.0, &mut rng);
            let mut m = g.transpose().matmul(&g).unwrap();
            m.add_diag(1e-2);
            let rhs: Vec<f64> = (0..n).map(|_| rng.gaussian(0.0, 10.0)).collect();
            let x = solve_spd(&m, &rhs).unwrap();
            let r: Vec<f64> = m.matvec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
            assert!(norm_inf(&r) <= 1e-8 * (1.0 + norm_inf(&rhs)), "n={n}");
        }
    }

    #[test]
    fn sampling_contracts() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample(Dist::Bernoulli { p: 1.0 }, &mut rng).unwrap(), 1.0);
        assert!(sample(Dist::Gaussian { mean: 0.0, variance: -1.0 }, &mut rng).is_err());
        assert!(sample(Dist::Uniform { lo: 1.0, hi: 0.0 }, &mut rng).is_err());
        assert!(sample(Dist::Bernoulli { p: 1.5 }, &mut rng).is_err());

        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample(Dist::Gaussian { mean: 0.0, variance: 1.0 }, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |s: &mut RngStream| (0..1000).map(|_| s.next_f64()).collect::<Vec<_>>();
        assert_eq!(draw(&mut RngStream::new(5, 3)), draw(&mut RngStream::new(5, 3)));

        let n = 10_000;
        let mut a = RngStream::new(5, 0);
        let mut b = RngStream::new(5, 1);
        let xs: Vec<f64> = (0..n).map(|_| a.gaussian(0.0, 1.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.gaussian(0.0, 1.0)).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n as f64, ys.iter().sum::<f64>() / n as f64);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        assert!((cov / (vx * vy).sqrt()).abs() < 0.05);
    }

    #[test]
    fn order_statistic() {
        let mut v = vec![5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(order_statistic_quantile(&mut v, 0.8), 4.0);
        assert_eq!(order_statistic_quantile(&mut v, 0.81), 5.0);
    }
}
