//! Standard-form linear programs, a bounded-variable simplex solver and the
//! box-uncertainty robust counterpart.
//!
//! Programs are always `min cᵀx  s.t.  A x = b,  lo ≤ x ≤ hi`, where either
//! bound may be infinite. The solver is a two-phase primal simplex working on
//! a dense tableau `B⁻¹[A | S]`; the artificial block `S` doubles as a record
//! of `B⁻¹`, which is what lets us refactor and read off duals cheaply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Reduced-cost tolerance (scaled by `max(1, ‖c‖∞)`).
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot.
pub const PIVOT_TOL: f64 = 1e-10;

const REFACTOR_EVERY: usize = 64;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    c: Vec<f64>,
    a: Matrix,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl LinearProgram {
    pub fn new(c: Vec<f64>, a: Matrix, b: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let n = c.len();
        if a.cols() != n || a.rows() != b.len() || lo.len() != n || hi.len() != n {
            return Err(Error::Dimension(format!(
                "c:{n} A:{}x{} b:{} lo:{} hi:{}",
                a.rows(),
                a.cols(),
                b.len(),
                lo.len(),
                hi.len()
            )));
        }
        if c.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective or rhs"));
        }
        for j in 0..n {
            if lo[j].is_nan() || hi[j].is_nan() || lo[j] > hi[j] || lo[j] == f64::INFINITY || hi[j] == f64::NEG_INFINITY {
                return Err(Error::Parameter(format!(
                    "variable {j} has bounds [{}, {}]",
                    lo[j], hi[j]
                )));
            }
        }
        Ok(Self { c, a, b, lo, hi })
    }

    /// A program with no equality rows.
    pub fn bounded(c: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let n = c.len();
        Self::new(c, Matrix::zeros(0, n), Vec::new(), lo, hi)
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    /// Same feasible set, different objective.
    pub fn with_objective(&self, c: Vec<f64>) -> Result<Self> {
        Self::new(c, self.a.clone(), self.b.clone(), self.lo.clone(), self.hi.clone())
    }

    /// Max-norm violation of `A x = b` and of the bounds.
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        let ax = self.a.matvec(x);
        let rows = ax.iter().zip(&self.b).map(|(l, r)| (l - r).abs());
        let bounds = x
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.lo[j] - v).max(v - self.hi[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawProgram = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        let raw = RawProgram {
            c: self.c.clone(),
            a: (0..self.a.rows()).map(|i| self.a.row(i).to_vec()).collect(),
            b: self.b.clone(),
            lo: self.lo.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            hi: self.hi.iter().map(|v| v.is_finite().then_some(*v)).collect(),
        };
        serde_json::to_string(&raw).expect("program serializes")
    }
}

/// JSON form of a program; `null` bounds are infinite.
#[derive(Debug, Serialize, Deserialize)]
struct RawProgram {
    c: Vec<f64>,
    #[serde(default)]
    a: Vec<Vec<f64>>,
    #[serde(default)]
    b: Vec<f64>,
    lo: Vec<Option<f64>>,
    hi: Vec<Option<f64>>,
}

impl TryFrom<RawProgram> for LinearProgram {
    type Error = Error;

    fn try_from(raw: RawProgram) -> Result<Self> {
        let n = raw.c.len();
        if raw.a.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("constraint row length differs from c".into()));
        }
        let a = Matrix::from_vec(raw.a.len(), n, raw.a.concat())?;
        let lo = raw.lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let hi = raw.hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        LinearProgram::new(raw.c, a, raw.b, lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub value: f64,
    /// Row multipliers `y` with `c − Aᵀy` the reduced costs.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Box uncertainty set `[lower, upper]` for a cost vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("box bounds differ in length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::Parameter("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Degenerate box `{c}`.
    pub fn point(c: Vec<f64>) -> Self {
        Self {
            lower: c.clone(),
            upper: c,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, c: &[f64]) -> bool {
        c.len() == self.dim()
            && c.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    /// `max_{c ∈ box} cᵀx`.
    pub fn worst_case(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(xj, (l, u))| (l * xj).max(u * xj))
            .sum()
    }

    /// The box `{−c : c ∈ self}`.
    pub fn negated(&self) -> BoxSet {
        BoxSet {
            lower: self.upper.iter().map(|v| -v).collect(),
            upper: self.lower.iter().map(|v| -v).collect(),
        }
    }
}

/// Epigraph reformulation of `min_x max_{c ∈ box} cᵀx`.
///
/// Columns are `[x (n) | t (n) | s⁺ (n) | s⁻ (n)]` and rows are the original
/// equalities followed by `t_j − u_j x_j − s⁺_j = 0` and
/// `t_j − l_j x_j − s⁻_j = 0`, with `t` free and both slack blocks
/// nonnegative. The objective is `Σ t_j`.
pub fn robustify_box(p: &LinearProgram, uncertainty: &BoxSet) -> Result<LinearProgram> {
    let n = p.num_vars();
    let m = p.num_rows();
    if uncertainty.dim() != n {
        return Err(Error::Dimension(format!(
            "box has dimension {} but program has {n} variables",
            uncertainty.dim()
        )));
    }
    let cols = 4 * n;
    let mut a = Matrix::zeros(m + 2 * n, cols);
    for i in 0..m {
        a.row_mut(i)[..n].copy_from_slice(p.a.row(i));
    }
    for j in 0..n {
        let up = m + j;
        a[(up, j)] = -uncertainty.upper[j];
        a[(up, n + j)] = 1.0;
        a[(up, 2 * n + j)] = -1.0;
        let low = m + n + j;
        a[(low, j)] = -uncertainty.lower[j];
        a[(low, n + j)] = 1.0;
        a[(low, 3 * n + j)] = -1.0;
    }
    let mut b = p.b.clone();
    b.resize(m + 2 * n, 0.0);

    let mut c = vec![0.0; cols];
    c[n..2 * n].fill(1.0);
    let mut lo = p.lo.clone();
    lo.extend(std::iter::repeat_n(f64::NEG_INFINITY, n));
    lo.extend(std::iter::repeat_n(0.0, 2 * n));
    let mut hi = p.hi.clone();
    hi.extend(std::iter::repeat_n(f64::INFINITY, 3 * n));
    LinearProgram::new(c, a, b, lo, hi)
}

/// Solves `min_x max_{c ∈ box} cᵀx` over the feasible set of `p`.
///
/// When every variable has a sign fixed by its bounds the worst-case cost is
/// a single box corner and the original program is solved with that
/// objective; otherwise the epigraph form from [`robustify_box`] is solved.
/// Either way `x` has the original `n` entries and `value` is the worst-case
/// objective.
pub fn solve_robust_box(p: &LinearProgram, uncertainty: &BoxSet) -> Result<LpSolution> {
    let n = p.num_vars();
    if uncertainty.dim() != n {
        return Err(Error::Dimension(format!(
            "box has dimension {} but program has {n} variables",
            uncertainty.dim()
        )));
    }
    let corner: Option<Vec<f64>> = (0..n)
        .map(|j| {
            if p.lo[j] >= 0.0 {
                Some(uncertainty.upper[j])
            } else if p.hi[j] <= 0.0 {
                Some(uncertainty.lower[j])
            } else {
                None
            }
        })
        .collect();
    let mut sol = match corner {
        Some(c) => solve_lp(&p.with_objective(c)?)?,
        None => {
            let mut s = solve_lp(&robustify_box(p, uncertainty)?)?;
            s.x.truncate(n);
            s.duals.truncate(p.num_rows());
            s
        }
    };
    if sol.is_optimal() {
        sol.value = uncertainty.worst_case(&sol.x);
    }
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
    /// Free nonbasic variable held at zero.
    Zero,
}

struct Tableau<'a> {
    p: &'a LinearProgram,
    m: usize,
    n: usize,
    /// `B⁻¹ [A | S]`, `m × (n + m)`.
    t: Matrix,
    /// Signs of the artificial columns (`S = diag(sign)`).
    sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(p: &'a LinearProgram) -> Self {
        let (m, n) = (p.num_rows(), p.num_vars());
        let mut x = vec![0.0; n + m];
        let mut state = vec![VarState::Zero; n + m];
        for j in 0..n {
            if p.lo[j].is_finite() {
                x[j] = p.lo[j];
                state[j] = VarState::Lower;
            } else if p.hi[j].is_finite() {
                x[j] = p.hi[j];
                state[j] = VarState::Upper;
            }
        }
        let ax = p.a.matvec(&x[..n]);
        let mut sign = vec![1.0; m];
        let mut t = Matrix::zeros(m, n + m);
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let r = p.b[i] - ax[i];
            sign[i] = if r >= 0.0 { 1.0 } else { -1.0 };
            x[n + i] = r.abs();
            for j in 0..n {
                t[(i, j)] = sign[i] * p.a[(i, j)];
            }
            t[(i, n + i)] = 1.0;
            basis.push(n + i);
            state[n + i] = VarState::Basic(i);
        }
        let mut lo = p.lo.clone();
        lo.extend(std::iter::repeat_n(0.0, m));
        let mut hi = p.hi.clone();
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));
        Self {
            p,
            m,
            n,
            t,
            sign,
            lo,
            hi,
            x,
            basis,
            state,
            iterations: 0,
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            (0..self.m).map(|i| self.p.a[(i, j)]).collect()
        } else {
            let mut col = vec![0.0; self.m];
            col[j - self.n] = self.sign[j - self.n];
            col
        }
    }

    /// Rebuilds the tableau from the current basis by Gauss-Jordan
    /// elimination and recomputes basic values from the nonbasic ones.
    fn refactor(&mut self) {
        let (m, width) = (self.m, self.n + self.m);
        let mut work = Matrix::zeros(m, m + width);
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column(j).into_iter().enumerate() {
                work[(i, k)] = v;
            }
        }
        for i in 0..m {
            for j in 0..self.n {
                work[(i, m + j)] = self.p.a[(i, j)];
            }
            work[(i, m + self.n + i)] = self.sign[i];
        }
        // Row-reduce [B | A S] to [I | B⁻¹ A S].
        let mut row_of = vec![0; m];
        let mut used = vec![false; m];
        for k in 0..m {
            let piv = (0..m)
                .filter(|&i| !used[i])
                .max_by(|&a, &b| work[(a, k)].abs().total_cmp(&work[(b, k)].abs()))
                .expect("square basis");
            if work[(piv, k)].abs() < 1e-14 {
                // Numerically singular basis; keep the incrementally updated tableau.
                return;
            }
            used[piv] = true;
            row_of[k] = piv;
            let inv = 1.0 / work[(piv, k)];
            for v in work.row_mut(piv) {
                *v *= inv;
            }
            let pivot_row = work.row(piv).to_vec();
            for i in 0..m {
                if i != piv {
                    let f = work[(i, k)];
                    if f != 0.0 {
                        for (w, p) in work.row_mut(i).iter_mut().zip(&pivot_row) {
                            *w -= f * p;
                        }
                    }
                }
            }
        }
        for k in 0..m {
            self.t.row_mut(k).copy_from_slice(&work.row(row_of[k])[m..]);
        }
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut rhs = self.p.b.clone();
        for j in 0..n + m {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                for (i, v) in self.column(j).into_iter().enumerate() {
                    rhs[i] -= v * self.x[j];
                }
            }
        }
        // B⁻¹ = T_art · S, so B⁻¹ r = Σ_k T[i, n+k] · sign_k · r_k.
        for i in 0..m {
            let row = self.t.row(i);
            let v: f64 = (0..m).map(|k| row[n + k] * self.sign[k] * rhs[k]).sum();
            self.x[self.basis[i]] = v;
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        (0..m)
            .map(|k| {
                (0..m)
                    .map(|i| cost[self.basis[i]] * self.t[(i, n + k)] * self.sign[k])
                    .sum()
            })
            .collect()
    }

    fn run_phase(&mut self, cost: &[f64]) -> Result<PhaseOutcome> {
        let width = self.n + self.m;
        let scale = cost.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let opt_tol = OPTIMALITY_TOL * scale;
        let bland_after = 5 * width;
        let mut pivots = 0usize;
        let mut since_refactor = 0usize;
        loop {
            self.iterations += 1;
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Domain("simplex iteration limit reached".into()));
            }
            let bland = pivots >= bland_after;

            // Reduced costs d_j = c_j − c_Bᵀ T_j.
            let mut cb_t = vec![0.0; width];
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    crate::numerics::axpy(cb, self.t.row(i), &mut cb_t);
                }
            }
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..width {
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = cost[j] - cb_t[j];
                let dir = match self.state[j] {
                    VarState::Basic(_) => continue,
                    VarState::Lower if d < -opt_tol => 1.0,
                    VarState::Upper if d > opt_tol => -1.0,
                    VarState::Zero if d < -opt_tol => 1.0,
                    VarState::Zero if d > opt_tol => -1.0,
                    _ => continue,
                };
                match entering {
                    None => entering = Some((j, dir, d.abs())),
                    Some((_, _, best)) if !bland && d.abs() > best => {
                        entering = Some((j, dir, d.abs()))
                    }
                    _ => {}
                }
                if bland && entering.is_some() {
                    break;
                }
            }
            let Some((j, dir, _)) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            // Ratio test.
            let mut best: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let alpha = dir * self.t[(i, j)];
                let bv = self.basis[i];
                let theta = if alpha > PIVOT_TOL && self.lo[bv].is_finite() {
                    (self.x[bv] - self.lo[bv]) / alpha
                } else if alpha < -PIVOT_TOL && self.hi[bv].is_finite() {
                    (self.hi[bv] - self.x[bv]) / -alpha
                } else {
                    continue;
                };
                let theta = theta.max(0.0);
                let better = match best {
                    None => true,
                    Some((r, bt, ba)) => {
                        let tie = (theta - bt).abs() <= 1e-12 * (1.0 + bt.abs());
                        if tie {
                            if bland {
                                bv < self.basis[r]
                            } else {
                                alpha.abs() > ba
                            }
                        } else {
                            theta < bt
                        }
                    }
                };
                if better {
                    best = Some((i, theta, alpha.abs()));
                }
            }
            let flip = self.hi[j] - self.lo[j];
            let row_theta = best.map_or(f64::INFINITY, |b| b.1);
            if !flip.is_finite() && !row_theta.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }

            if flip <= row_theta {
                for i in 0..self.m {
                    let bv = self.basis[i];
                    self.x[bv] -= dir * flip * self.t[(i, j)];
                }
                if dir > 0.0 {
                    self.x[j] = self.hi[j];
                    self.state[j] = VarState::Upper;
                } else {
                    self.x[j] = self.lo[j];
                    self.state[j] = VarState::Lower;
                }
                continue;
            }

            let (r, theta, _) = best.expect("finite row ratio");
            for i in 0..self.m {
                let bv = self.basis[i];
                self.x[bv] -= dir * theta * self.t[(i, j)];
            }
            self.x[j] += dir * theta;
            let leaving = self.basis[r];
            if dir * self.t[(r, j)] > 0.0 {
                self.x[leaving] = self.lo[leaving];
                self.state[leaving] = VarState::Lower;
            } else {
                self.x[leaving] = self.hi[leaving];
                self.state[leaving] = VarState::Upper;
            }
            self.pivot(r, j);
            pivots += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor();
                since_refactor = 0;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let inv = 1.0 / self.t[(r, j)];
        for v in self.t.row_mut(r) {
            *v *= inv;
        }
        let pivot_row = self.t.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[(i, j)];
            if f != 0.0 {
                for (w, p) in self.t.row_mut(i).iter_mut().zip(&pivot_row) {
                    *w -= f * p;
                }
                self.t[(i, j)] = 0.0;
            }
        }
        self.basis[r] = j;
        self.state[j] = VarState::Basic(r);
    }
}

/// Solves a linear program with the two-phase bounded-variable simplex.
///
/// Dantzig pricing is used until `5·(n+m)` pivots have been made in a phase,
/// after which Bland's rule guarantees termination.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution> {
    let (m, n) = (p.num_rows(), p.num_vars());
    let mut tab = Tableau::new(p);

    if m > 0 {
        let mut phase1 = vec![0.0; n + m];
        phase1[n..].fill(1.0);
        tab.run_phase(&phase1)?;
        tab.refactor();
        let infeasibility: f64 = tab.x[n..].iter().sum();
        if infeasibility > FEASIBILITY_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: tab.x[..n].to_vec(),
                value: f64::NAN,
                duals: vec![0.0; m],
                iterations: tab.iterations,
            });
        }
        for k in n..n + m {
            tab.hi[k] = 0.0;
            if !matches!(tab.state[k], VarState::Basic(_)) {
                tab.x[k] = 0.0;
                tab.state[k] = VarState::Lower;
            }
        }
    }

    let mut cost = p.c.clone();
    cost.resize(n + m, 0.0);
    let outcome = tab.run_phase(&cost)?;
    if m > 0 {
        tab.refactor();
    }
    let x = tab.x[..n].to_vec();
    let (status, value) = match outcome {
        PhaseOutcome::Optimal => (LpStatus::Optimal, dot(&p.c, &x)),
        PhaseOutcome::Unbounded => (LpStatus::Unbounded, f64::NEG_INFINITY),
    };
    Ok(LpSolution {
        status,
        value,
        duals: tab.duals(&cost),
        x,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn lp(c: &[f64], rows: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> LinearProgram {
        let a = if rows.is_empty() {
            Matrix::zeros(0, c.len())
        } else {
            Matrix::from_rows(rows).unwrap()
        };
        LinearProgram::new(c.to_vec(), a, b.to_vec(), lo.to_vec(), hi.to_vec()).unwrap()
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn small_examples() {
        let s = solve_lp(&lp(&[1.0, 0.0], &[vec![1.0, 1.0]], &[1.0], &[0.0, 0.0], &[INF, INF])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0]).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!(s.value.abs() < 1e-12);

        let s = solve_lp(&LinearProgram::bounded(vec![2.0], vec![-1.0], vec![1.0]).unwrap()).unwrap();
        assert_eq!(s.x, vec![-1.0]);
        assert_eq!(s.value, -2.0);

        let s = solve_lp(&lp(&[0.0, 0.0], &[vec![1.0, 1.0]], &[-1.0], &[0.0, 0.0], &[INF, INF])).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);

        let s = solve_lp(&lp(&[-1.0, 0.0], &[vec![1.0, -1.0]], &[0.0], &[0.0, 0.0], &[INF, INF])).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);

        let s = solve_lp(&LinearProgram::bounded(vec![1.0], vec![-INF], vec![INF]).unwrap()).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn construction_errors() {
        let a = Matrix::zeros(1, 2);
        assert!(LinearProgram::new(vec![1.0], a.clone(), vec![0.0], vec![0.0], vec![1.0]).is_err());
        assert!(LinearProgram::new(vec![1.0, 1.0], a, vec![0.0], vec![0.0, 2.0], vec![1.0, 1.0]).is_err());
        let p = LinearProgram::bounded(vec![1.0], vec![0.0], vec![1.0]).unwrap();
        assert!(robustify_box(&p, &BoxSet::point(vec![1.0, 2.0])).is_err());
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn free_variables_and_duals() {
        // min x1 + x2 s.t. x1 - x2 = 1, x1 free, 0 <= x2 <= 3
        let p = lp(&[1.0, 1.0], &[vec![1.0, -1.0]], &[1.0], &[-INF, 0.0], &[INF, 3.0]);
        let s = solve_lp(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.value - 1.0).abs() < 1e-12);
        // Reduced cost of x1 (basic, free) must vanish.
        let d0 = p.objective()[0] - s.duals[0] * 1.0;
        assert!(d0.abs() < 1e-9);
    }

    #[test]
    fn robustify_examples() {
        let p = LinearProgram::bounded(vec![0.0], vec![-1.0], vec![1.0]).unwrap();
        let s = solve_lp(&robustify_box(&p, &BoxSet::new(vec![-1.0], vec![2.0]).unwrap()).unwrap()).unwrap();
        assert!(s.x[0].abs() < 1e-9 && s.value.abs() < 1e-9);
        let s = solve_lp(&robustify_box(&p, &BoxSet::new(vec![1.0], vec![2.0]).unwrap()).unwrap()).unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-9 && (s.value + 1.0).abs() < 1e-9);

        let r = robustify_box(&p, &BoxSet::point(vec![3.0])).unwrap();
        assert_eq!((r.num_vars(), r.num_rows()), (4, 2));
    }

    #[test]
    fn robust_with_nonnegative_domain_uses_upper_corner() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..50 {
            let c: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let lower: Vec<f64> = c.iter().map(|v| v - rng.uniform(0.0, 1.0)).collect();
            let upper: Vec<f64> = c.iter().map(|v| v + rng.uniform(0.0, 1.0)).collect();
            let p = lp(&c, &[vec![1.0, 1.0, 1.0]], &[1.0], &[0.0; 3], &[INF; 3]);
            let boxed = BoxSet::new(lower, upper.clone()).unwrap();
            let robust = solve_lp(&robustify_box(&p, &boxed).unwrap()).unwrap();
            let nominal = solve_lp(&p.with_objective(upper).unwrap()).unwrap();
            assert!((robust.value - nominal.value).abs() < 1e-9);
            let direct = solve_robust_box(&p, &boxed).unwrap();
            assert!((direct.value - nominal.value).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_robust_box_examples() {
        let p = LinearProgram::bounded(vec![0.0], vec![-1.0], vec![1.0]).unwrap();
        let s = solve_robust_box(&p, &BoxSet::point(vec![0.7])).unwrap();
        assert_eq!(s.x, vec![-1.0]);
        let s = solve_robust_box(&p, &BoxSet::new(vec![-0.5], vec![0.25]).unwrap()).unwrap();
        assert!(s.x[0].abs() < 1e-12);
        let s = solve_robust_box(&p, &BoxSet::new(vec![0.1], vec![5.0]).unwrap()).unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let p = lp(&[1.0, 2.0], &[vec![1.0, 1.0]], &[1.0], &[0.0, -INF], &[INF, 4.0]);
        assert_eq!(LinearProgram::from_json(&p.to_json()).unwrap(), p);
        assert!(LinearProgram::from_json(r#"{"c":[1],"a":[[1,2]],"b":[1],"lo":[0],"hi":[1]}"#).is_err());
        assert!(LinearProgram::from_json(r#"{"c":[1],"lo":[2],"hi":[1]}"#).is_err());
        assert!(LinearProgram::from_json("not json").is_err());
    }
}
