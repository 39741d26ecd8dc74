//! Data generators and LP builders for the experiment worlds: the 1-d
//! Gaussian toy, the multi-dimensional simple example, the 5×5 grid shortest
//! path and the 20-item fractional knapsack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{robustify_box, solve_robust_box, BoxSet, LinearProgram, LpSolution};
use crate::numerics::{Matrix, RngStream};
use crate::predictors::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Covariate,
    Label,
}

/// `c = z + ε` with `z ~ N(0, σ₁²)`, `ε ~ N(0, σ₂²)` under `P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyScenario {
    pub sigma1: f64,
    pub sigma2: f64,
    pub shift: f64,
    pub kind: ShiftKind,
}

impl ToyScenario {
    pub fn new(sigma1: f64, sigma2: f64, shift: f64, kind: ShiftKind) -> Result<Self> {
        let s = Self {
            sigma1,
            sigma2,
            shift,
            kind,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0 && self.sigma1.is_finite() && self.sigma2.is_finite()) {
            return Err(Error::Parameter(format!(
                "toy scales must be positive, got σ₁={} σ₂={}",
                self.sigma1, self.sigma2
            )));
        }
        if !(self.shift >= 0.0 && self.shift.is_finite()) {
            return Err(Error::Parameter(format!("shift must be finite and nonnegative, got {}", self.shift)));
        }
        Ok(())
    }

    /// Variance of the cost marginal, `σ₁² + σ₂²`.
    pub fn cost_variance(&self) -> f64 {
        self.sigma1 * self.sigma1 + self.sigma2 * self.sigma2
    }

    /// Mean of `z` under the given phase.
    pub fn z_mean(&self, phase: Phase) -> f64 {
        match (phase, self.kind) {
            (Phase::Train, _) => 0.0,
            (Phase::Test, ShiftKind::Covariate) => self.shift,
            (Phase::Test, ShiftKind::Label) => self.sigma1 * self.sigma1 * self.shift / self.cost_variance(),
        }
    }

    /// Mean and standard deviation of `c | z`.
    pub fn conditional(&self, z: f64, phase: Phase) -> (f64, f64) {
        let offset = match (phase, self.kind) {
            (Phase::Test, ShiftKind::Label) => self.sigma2 * self.sigma2 * self.shift / self.cost_variance(),
            _ => 0.0,
        };
        (z + offset, self.sigma2)
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream, phase: Phase) -> Dataset {
        let mut z = Matrix::zeros(n, 1);
        let mut c = Matrix::zeros(n, 1);
        let v = self.cost_variance();
        for i in 0..n {
            let (zi, ci) = match (phase, self.kind) {
                (Phase::Test, ShiftKind::Label) => {
                    let ci = rng.gaussian(self.shift, v.sqrt());
                    let s1 = self.sigma1 * self.sigma1;
                    let zi = rng.gaussian(s1 * ci / v, (s1 * self.sigma2 * self.sigma2 / v).sqrt());
                    (zi, ci)
                }
                _ => {
                    let zi = rng.gaussian(self.z_mean(phase), self.sigma1);
                    (zi, zi + rng.gaussian(0.0, self.sigma2))
                }
            };
            z[(i, 0)] = zi;
            c[(i, 0)] = ci;
        }
        Dataset { z, c }
    }
}

/// `c = (sign(z₁) + ε)·√|z₁|`, `z ~ N(0, I_d)` under `P` and `N(shift·1_d, I_d)` under `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleScenario {
    pub d: usize,
    pub shift: f64,
    pub noise_variance: f64,
}

impl SimpleScenario {
    pub fn new(d: usize) -> Result<Self> {
        let s = Self {
            d,
            shift: 1.0,
            noise_variance: 0.1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Parameter("simple scenario needs d ≥ 1".into()));
        }
        if !(self.noise_variance >= 0.0) || !self.shift.is_finite() {
            return Err(Error::Parameter("simple scenario noise or shift invalid".into()));
        }
        Ok(())
    }

    pub fn cost(&self, z1: f64, rng: &mut RngStream) -> f64 {
        let eps = rng.gaussian(0.0, self.noise_variance.sqrt());
        (sign(z1) + eps) * z1.abs().sqrt()
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream, phase: Phase) -> Dataset {
        let mean = match phase {
            Phase::Train => 0.0,
            Phase::Test => self.shift,
        };
        let z = Matrix::from_fn(n, self.d, |_, _| rng.gaussian(mean, 1.0));
        let c = Matrix::from_fn(n, 1, |i, _| self.cost(z[(i, 0)], rng));
        Dataset { z, c }
    }
}

/// `sign(0) = 0`, unlike `f64::signum`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub const GRID_SIDE: usize = 5;
pub const GRID_EDGES: usize = 40;
pub const CONTEXT_DIM: usize = 10;
pub const KNAPSACK_ITEMS: usize = 20;
/// Grid edge costs are floored here so the flow LP stays bounded.
pub const GRID_COST_FLOOR: f64 = 0.01;

fn bernoulli_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| if rng.next_f64() < 0.5 { 1.0 } else { 0.0 })
}

fn shifted_gaussian(n: usize, d: usize, shift: f64, phase: Phase, rng: &mut RngStream) -> Matrix {
    let mean = match phase {
        Phase::Train => 0.0,
        Phase::Test => shift,
    };
    Matrix::from_fn(n, d, |_, _| rng.gaussian(mean, 1.0))
}

/// Shortest path from the top-left to the bottom-right node of a 5×5 grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScenario {
    theta: Matrix,
    edges: Vec<(usize, usize)>,
    pub shift: f64,
}

impl GridScenario {
    /// `Θ` is drawn once from `instance_seed` and then frozen.
    pub fn new(instance_seed: u64, shift: f64) -> Self {
        let mut rng = RngStream::new(instance_seed, 0x6772_6964);
        let theta = bernoulli_matrix(GRID_EDGES, CONTEXT_DIM, &mut rng);
        Self {
            theta,
            edges: grid_edges(),
            shift,
        }
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    /// Undirected edges as node-index pairs, nodes numbered row-major.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        GRID_SIDE * GRID_SIDE - 1
    }

    /// Flow program over 80 arcs; arc `2e` runs along edge `e` as listed and
    /// arc `2e + 1` against it. The objective is left at zero.
    pub fn program(&self) -> LinearProgram {
        let nodes = GRID_SIDE * GRID_SIDE;
        let mut a = Matrix::zeros(nodes, 2 * GRID_EDGES);
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            a[(u, 2 * e)] = 1.0;
            a[(v, 2 * e)] = -1.0;
            a[(v, 2 * e + 1)] = 1.0;
            a[(u, 2 * e + 1)] = -1.0;
        }
        let mut b = vec![0.0; nodes];
        b[self.source()] = 1.0;
        b[self.sink()] = -1.0;
        LinearProgram::new(
            vec![0.0; 2 * GRID_EDGES],
            a,
            b,
            vec![0.0; 2 * GRID_EDGES],
            vec![f64::INFINITY; 2 * GRID_EDGES],
        )
        .expect("grid program is well formed")
    }

    /// Edge cost box lifted onto both arc directions and raised to the cost
    /// floor. Costs never fall below the floor, so no covered cost is lost,
    /// and a negative predicted cost can no longer open a negative cycle.
    pub fn arc_box(&self, edge_box: &BoxSet) -> Result<BoxSet> {
        if edge_box.dim() != GRID_EDGES {
            return Err(Error::Dimension(format!("grid cost box has dimension {}", edge_box.dim())));
        }
        let dup = |v: &[f64]| v.iter().flat_map(|x| [x.max(GRID_COST_FLOOR); 2]).collect::<Vec<_>>();
        BoxSet::new(dup(edge_box.lower()), dup(edge_box.upper()))
    }

    /// Pre-noise cost `(Θz/√d + 3)⁵ + 1` per edge.
    pub fn base_costs(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != CONTEXT_DIM {
            return Err(Error::Dimension(format!("grid covariate has dimension {}", z.len())));
        }
        let scale = (CONTEXT_DIM as f64).sqrt();
        Ok(self.theta.matvec(z).iter().map(|t| (t / scale + 3.0).powi(5) + 1.0).collect())
    }

    pub fn sample_costs(&self, z: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        Ok(self
            .base_costs(z)?
            .into_iter()
            .map(|b| (b * rng.uniform(0.75, 1.25)).max(GRID_COST_FLOOR))
            .collect())
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream, phase: Phase) -> Result<Dataset> {
        let z = shifted_gaussian(n, CONTEXT_DIM, self.shift, phase, rng);
        let mut c = Matrix::zeros(n, GRID_EDGES);
        for i in 0..n {
            let costs = self.sample_costs(z.row(i), rng)?;
            c.row_mut(i).copy_from_slice(&costs);
        }
        Ok(Dataset { z, c })
    }

    /// Robust path for an edge-cost box.
    pub fn solve(&self, edge_box: &BoxSet) -> Result<LpSolution> {
        solve_robust_box(&self.program(), &self.arc_box(edge_box)?)
    }

    /// Total edge cost of an arc flow.
    pub fn path_cost(&self, edge_costs: &[f64], x: &[f64]) -> f64 {
        edge_costs.iter().enumerate().map(|(e, c)| c * (x[2 * e] + x[2 * e + 1])).sum()
    }

    /// Checks that `x` is 0/1 and traces a simple source-to-sink path.
    pub fn is_path(&self, x: &[f64]) -> bool {
        if x.len() != 2 * GRID_EDGES || x.iter().any(|v| (v - v.round()).abs() > 1e-7 || !(-1e-7..=1.0 + 1e-7).contains(v)) {
            return false;
        }
        let mut next = vec![None; GRID_SIDE * GRID_SIDE];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            for (arc, from, to) in [(2 * e, u, v), (2 * e + 1, v, u)] {
                if x[arc] > 0.5 {
                    if next[from].is_some() {
                        return false;
                    }
                    next[from] = Some(to);
                }
            }
        }
        let used = x.iter().filter(|v| **v > 0.5).count();
        let mut node = self.source();
        let mut steps = 0;
        while node != self.sink() {
            match next[node] {
                Some(n) if steps < used => {
                    node = n;
                    steps += 1;
                }
                _ => return false,
            }
        }
        steps == used
    }
}

fn grid_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(GRID_EDGES);
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            let u = i * GRID_SIDE + j;
            if j + 1 < GRID_SIDE {
                edges.push((u, u + 1));
            }
            if i + 1 < GRID_SIDE {
                edges.push((u, u + GRID_SIDE));
            }
        }
    }
    edges
}

/// Fractional knapsack with 20 items, `c | z = (Θz)² ∘ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackScenario {
    theta: Matrix,
    prices: Vec<f64>,
    budget: f64,
    pub shift: f64,
}

impl KnapsackScenario {
    /// `Θ` and prices `p ~ U(1, 10)` are drawn from `instance_seed`; the
    /// budget is `0.3·Σp`.
    pub fn new(instance_seed: u64, shift: f64) -> Self {
        let mut rng = RngStream::new(instance_seed, 0x6b6e_6170);
        let theta = bernoulli_matrix(KNAPSACK_ITEMS, CONTEXT_DIM, &mut rng);
        let prices: Vec<f64> = (0..KNAPSACK_ITEMS).map(|_| rng.uniform(1.0, 10.0)).collect();
        let budget = 0.3 * prices.iter().sum::<f64>();
        Self {
            theta,
            prices,
            budget,
            shift,
        }
    }

    pub fn with_market(theta: Matrix, prices: Vec<f64>, budget: f64) -> Result<Self> {
        if theta.rows() != prices.len() || theta.cols() != CONTEXT_DIM {
            return Err(Error::Dimension("knapsack Θ and prices disagree".into()));
        }
        if prices.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Parameter("knapsack prices must be positive".into()));
        }
        if !(budget >= 0.0) {
            return Err(Error::Parameter(format!("knapsack budget {budget} is negative")));
        }
        Ok(Self {
            theta,
            prices,
            budget,
            shift: 1.0,
        })
    }

    pub fn items(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// `min 0ᵀx  s.t.  pᵀx + s = B,  x ∈ [0,1]ⁿ,  s ≥ 0`.
    pub fn program(&self) -> LinearProgram {
        let n = self.items();
        let mut row = self.prices.clone();
        row.push(1.0);
        let mut hi = vec![1.0; n];
        hi.push(f64::INFINITY);
        LinearProgram::new(
            vec![0.0; n + 1],
            Matrix::from_vec(1, n + 1, row).expect("finite prices"),
            vec![self.budget],
            vec![0.0; n + 1],
            hi,
        )
        .expect("knapsack program is well formed")
    }

    /// Cost box `[−u, −l]` for the utility box `[l, u]`, plus a zero entry
    /// for the budget slack.
    pub fn cost_box(&self, utility_box: &BoxSet) -> Result<BoxSet> {
        if utility_box.dim() != self.items() {
            return Err(Error::Dimension(format!("knapsack utility box has dimension {}", utility_box.dim())));
        }
        let neg = utility_box.negated();
        let mut lo = neg.lower().to_vec();
        let mut hi = neg.upper().to_vec();
        lo.push(0.0);
        hi.push(0.0);
        BoxSet::new(lo, hi)
    }

    pub fn solve(&self, utility_box: &BoxSet) -> Result<LpSolution> {
        let mut sol = solve_robust_box(&self.program(), &self.cost_box(utility_box)?)?;
        sol.x.truncate(self.items());
        Ok(sol)
    }

    pub fn utility_means(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != CONTEXT_DIM {
            return Err(Error::Dimension(format!("knapsack covariate has dimension {}", z.len())));
        }
        Ok(self.theta.matvec(z).into_iter().map(|t| t * t).collect())
    }

    pub fn sample_utils(&self, z: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        Ok(self
            .utility_means(z)?
            .into_iter()
            .map(|m| m * rng.uniform(0.8, 1.2))
            .collect())
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream, phase: Phase) -> Result<Dataset> {
        let z = shifted_gaussian(n, CONTEXT_DIM, self.shift, phase, rng);
        let mut c = Matrix::zeros(n, self.items());
        for i in 0..n {
            let u = self.sample_utils(z.row(i), rng)?;
            c.row_mut(i).copy_from_slice(&u);
        }
        Ok(Dataset { z, c })
    }
}

/// Robust knapsack counterpart for a utility box, in epigraph form.
pub fn build_knapsack_lp(scn: &KnapsackScenario, utility_box: &BoxSet) -> Result<LinearProgram> {
    robustify_box(&scn.program(), &scn.cost_box(utility_box)?)
}

/// Serializable scenario description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScenarioSpec {
    Toy {
        #[serde(default = "one")]
        sigma1: f64,
        #[serde(default = "one")]
        sigma2: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default = "covariate")]
        shift_kind: ShiftKind,
    },
    Simple {
        #[serde(default = "four")]
        d: usize,
        #[serde(default = "one")]
        shift: f64,
    },
    ShortestPath {
        #[serde(default = "one")]
        shift: f64,
        #[serde(default)]
        instance_seed: u64,
    },
    Knapsack {
        #[serde(default = "one")]
        shift: f64,
        #[serde(default)]
        instance_seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

fn covariate() -> ShiftKind {
    ShiftKind::Covariate
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Toy { .. } => "toy",
            ScenarioSpec::Simple { .. } => "simple",
            ScenarioSpec::ShortestPath { .. } => "shortest_path",
            ScenarioSpec::Knapsack { .. } => "knapsack",
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        Ok(match *self {
            ScenarioSpec::Toy {
                sigma1,
                sigma2,
                shift,
                shift_kind,
            } => Scenario::Toy(ToyScenario::new(sigma1, sigma2, shift, shift_kind)?),
            ScenarioSpec::Simple { d, shift } => {
                let s = SimpleScenario {
                    d,
                    shift,
                    noise_variance: 0.1,
                };
                s.validate()?;
                Scenario::Simple(s)
            }
            ScenarioSpec::ShortestPath { shift, instance_seed } => {
                finite_shift(shift)?;
                Scenario::Grid(GridScenario::new(instance_seed, shift))
            }
            ScenarioSpec::Knapsack { shift, instance_seed } => {
                finite_shift(shift)?;
                Scenario::Knapsack(KnapsackScenario::new(instance_seed, shift))
            }
        })
    }
}

fn finite_shift(shift: f64) -> Result<()> {
    if shift.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter("shift must be finite".into()))
    }
}

/// A decision and its worst-case objective over the box it was solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Uniform view of the four worlds used by the experiment pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Toy(ToyScenario),
    Simple(SimpleScenario),
    Grid(GridScenario),
    Knapsack(KnapsackScenario),
}

impl Scenario {
    pub fn dim_z(&self) -> usize {
        match self {
            Scenario::Toy(_) => 1,
            Scenario::Simple(s) => s.d,
            Scenario::Grid(_) | Scenario::Knapsack(_) => CONTEXT_DIM,
        }
    }

    pub fn dim_c(&self) -> usize {
        match self {
            Scenario::Toy(_) | Scenario::Simple(_) => 1,
            Scenario::Grid(_) => GRID_EDGES,
            Scenario::Knapsack(k) => k.items(),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream, phase: Phase) -> Result<Dataset> {
        match self {
            Scenario::Toy(t) => Ok(t.sample(n, rng, phase)),
            Scenario::Simple(s) => Ok(s.sample(n, rng, phase)),
            Scenario::Grid(g) => g.sample(n, rng, phase),
            Scenario::Knapsack(k) => k.sample(n, rng, phase),
        }
    }

    /// One draw from the conditional cost law `c | z` under `phase`.
    pub fn sample_cost(&self, z: &[f64], rng: &mut RngStream, phase: Phase) -> Result<Vec<f64>> {
        if z.len() != self.dim_z() {
            return Err(Error::Dimension(format!("covariate has dimension {}", z.len())));
        }
        match self {
            Scenario::Toy(t) => {
                let (m, s) = t.conditional(z[0], phase);
                Ok(vec![rng.gaussian(m, s)])
            }
            Scenario::Simple(s) => Ok(vec![s.cost(z[0], rng)]),
            Scenario::Grid(g) => g.sample_costs(z, rng),
            Scenario::Knapsack(k) => k.sample_utils(z, rng),
        }
    }

    /// Robust decision for a cost box; for the 1-d worlds this is the toy
    /// program `min max_{c ∈ box} c·x` over `x ∈ [−1, 1]`.
    pub fn decide(&self, cost_box: &BoxSet) -> Result<Decision> {
        let sol = match self {
            Scenario::Toy(_) | Scenario::Simple(_) => solve_robust_box(&toy_program(), cost_box)?,
            Scenario::Grid(g) => g.solve(cost_box)?,
            Scenario::Knapsack(k) => k.solve(cost_box)?,
        };
        if !sol.is_optimal() {
            return Err(Error::Domain(format!("robust program ended {:?}", sol.status)));
        }
        Ok(Decision {
            x: sol.x,
            value: sol.value,
        })
    }

    /// Realised objective of decision `x` under cost `c`.
    pub fn objective(&self, c: &[f64], x: &[f64]) -> f64 {
        match self {
            Scenario::Toy(_) | Scenario::Simple(_) => c[0] * x[0],
            Scenario::Grid(g) => g.path_cost(c, x),
            Scenario::Knapsack(_) => -c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
        }
    }

    /// Conservative decisions: `x = 0` in the 1-d worlds, the empty basket
    /// for the knapsack. A path is never conservative in this sense.
    pub fn is_conservative(&self, x: &[f64]) -> bool {
        match self {
            Scenario::Toy(_) | Scenario::Simple(_) => x[0].abs() < 0.5,
            Scenario::Grid(_) => false,
            Scenario::Knapsack(_) => x.iter().all(|v| v.abs() < 1e-9),
        }
    }
}

/// `min c·x` over `x ∈ [−1, 1]`.
pub fn toy_program() -> LinearProgram {
    LinearProgram::bounded(vec![0.0], vec![-1.0], vec![1.0]).expect("toy program is well formed")
}
