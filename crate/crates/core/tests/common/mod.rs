//! Brute-force oracles shared by the integration and acceptance suites.
//! None of these go through the crate's solver or calibration code paths.

#![allow(clippy::needless_range_loop)]

#![allow(dead_code)]

use oodro::lp::LinearProgram;
use oodro::numerics::{Matrix, RngStream};

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|j| m >> j & 1 == 1).collect())
        .collect()
}

/// Minimum of `cᵀx` over `{A x = b, lo ≤ x ≤ hi}` by enumerating basic
/// points: every choice of `n − m` variables pinned at a bound, the rest
/// solved from the equalities. Bounds must be finite.
pub fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let m = b.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for pinned in subsets(n, n - m) {
        let free: Vec<usize> = (0..n).filter(|j| !pinned.contains(j)).collect();
        for bits in 0u32..1 << pinned.len() {
            let mut x = vec![0.0; n];
            for (k, &j) in pinned.iter().enumerate() {
                x[j] = if bits >> k & 1 == 1 { hi[j] } else { lo[j] };
            }
            let rhs: Vec<f64> = (0..m)
                .map(|i| b[i] - pinned.iter().map(|&j| a[i][j] * x[j]).sum::<f64>())
                .collect();
            let sys: Vec<Vec<f64>> = (0..m).map(|i| free.iter().map(|&j| a[i][j]).collect()).collect();
            let Some(xf) = (if m == 0 { Some(vec![]) } else { dense_solve(sys, rhs) }) else {
                continue;
            };
            for (k, &j) in free.iter().enumerate() {
                x[j] = xf[k];
            }
            if (0..n).all(|j| x[j] >= lo[j] - 1e-9 && x[j] <= hi[j] + 1e-9) {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, x));
                }
            }
        }
    }
    best
}

/// `min_x max_{c ∈ [l,u]} cᵀx` by splitting the domain into sign orthants.
/// Inside an orthant the maximising corner is fixed, so each piece is an
/// ordinary program solved by vertex enumeration.
pub fn robust_corner_oracle(
    a: &[Vec<f64>],
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
    l: &[f64],
    u: &[f64],
) -> Option<f64> {
    let n = lo.len();
    let mut best: Option<f64> = None;
    for signs in 0u32..1 << n {
        let mut lo2 = lo.to_vec();
        let mut hi2 = hi.to_vec();
        let mut corner = vec![0.0; n];
        let mut empty = false;
        for j in 0..n {
            if signs >> j & 1 == 1 {
                lo2[j] = lo[j].max(0.0);
                corner[j] = u[j];
            } else {
                hi2[j] = hi[j].min(0.0);
                corner[j] = l[j];
            }
            empty |= lo2[j] > hi2[j];
        }
        if empty {
            continue;
        }
        if let Some((v, _)) = vertex_enumeration(&corner, a, b, &lo2, &hi2) {
            best = Some(best.map_or(v, |bv: f64| bv.min(v)));
        }
    }
    best
}

pub struct RandomLp {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl RandomLp {
    /// Feasible by construction: `b = A x₀` for an interior `x₀`.
    pub fn feasible(rng: &mut RngStream, max_n: usize, max_m: usize, straddle_zero: bool) -> Self {
        let n = 1 + rng.below(max_n);
        let m = rng.below(max_m.min(n) + 1);
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| {
                if straddle_zero {
                    (-rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0))
                } else {
                    let l = rng.uniform(-2.0, 1.0);
                    (l, l + rng.uniform(0.5, 3.0))
                }
            })
            .unzip();
        let x0: Vec<f64> = (0..n).map(|j| rng.uniform(lo[j], hi[j])).collect();
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gaussian(0.0, 1.0)).collect()).collect();
        let b = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
        let c = (0..n).map(|_| rng.gaussian(0.0, 1.0)).collect();
        Self { c, a, b, lo, hi }
    }

    pub fn program(&self) -> LinearProgram {
        let a = if self.a.is_empty() {
            Matrix::zeros(0, self.c.len())
        } else {
            Matrix::from_rows(&self.a).unwrap()
        };
        LinearProgram::new(self.c.clone(), a, self.b.clone(), self.lo.clone(), self.hi.clone()).unwrap()
    }
}

/// Smallest candidate score `η` with `Σ w_i 1{s_i ≤ η} ≥ α Σ w_i`, found by
/// testing every candidate directly.
pub fn brute_force_eta(scores: &[f64], weights: &[f64], alpha: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let mut best = f64::INFINITY;
    for &eta in scores {
        let covered: f64 = scores.iter().zip(weights).filter(|(s, _)| **s <= eta).map(|(_, w)| w).sum();
        if covered >= alpha * total && eta < best {
            best = eta;
        }
    }
    if best.is_infinite() {
        scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        best
    }
}

/// Random pmf over `k` atoms with every mass at least `floor / k`.
pub fn random_pmf(rng: &mut RngStream, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| floor + rng.next_f64()).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // Put the rounding residue on the largest atom so the sum is 1 to the ulp.
    let resid = 1.0 - p.iter().sum::<f64>();
    let big = (0..k).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    p[big] += resid;
    p
}

/// Four-point world with distinct scores `|c|`, random `p` and `q`.
pub fn random_world(rng: &mut RngStream) -> oodro::analytic::DiscreteWorld {
    let k = 4;
    let mut mags: Vec<f64> = Vec::new();
    while mags.len() < k {
        let m = rng.uniform(0.1, 5.0);
        if mags.iter().all(|x| (x - m).abs() > 1e-3) {
            mags.push(m);
        }
    }
    let points = mags
        .iter()
        .map(|&m| (rng.gaussian(0.0, 1.0), if rng.next_f64() < 0.5 { -m } else { m }))
        .collect();
    let p = random_pmf(rng, k, 0.3);
    let q = random_pmf(rng, k, 0.3);
    oodro::analytic::DiscreteWorld::new(points, p, q).unwrap()
}


/// Fractional knapsack by value density: the exact LP optimum of
/// `max uᵀx, pᵀx ≤ budget, 0 ≤ x ≤ 1`.
pub fn greedy_fractional_knapsack(u: &[f64], p: &[f64], budget: f64) -> f64 {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&a, &b| (u[b] / p[b]).total_cmp(&(u[a] / p[a])));
    let mut left = budget;
    let mut value = 0.0;
    for i in idx {
        if u[i] <= 0.0 || left <= 0.0 {
            break;
        }
        let take = (left / p[i]).min(1.0);
        value += take * u[i];
        left -= take * p[i];
    }
    value
}
