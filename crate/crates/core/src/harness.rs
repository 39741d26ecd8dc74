//! End-to-end experiment runs: sample, fit `f̂` and `ĥ`, estimate the density
//! ratio, calibrate `η`, then decide and score on fresh test draws.
//!
//! Every replicate owns its random streams, keyed by `seed + replicate` and a
//! fixed stage index, so results do not depend on how replicates are
//! scheduled across threads.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{calib_scores, select_eta, uncertainty_box, CalibScores};
use crate::density_ratio::{
    fit_classifier_ratio, fit_kmm_covariate, fit_kmm_label, gaussian_oracle_ratio, trivial_ratio, ClassifierSpec, Clip,
    KmmOptions, RatioKind, RatioModel,
};
use crate::error::{Error, Result};
use crate::lp::BoxSet;
use crate::numerics::{order_statistic_quantile, Matrix, RngStream};
use crate::predictors::{compute_residuals, fit_mean, fit_quantile, Dataset, MeanModel, MeanSpec, QuantileModel, QuantileSpec};
use crate::report::{Format, Report, ReportRow};
use crate::scenarios::{Phase, Scenario, ScenarioSpec, ShiftKind};

const STREAM_TRAIN: u64 = 1;
const STREAM_MEAN: u64 = 2;
const STREAM_QUANTILE: u64 = 3;
const STREAM_RATIO_SAMPLE: u64 = 4;
const STREAM_RATIO_FIT: u64 = 5;
const STREAM_EVAL: u64 = 6;
/// Per-evaluation-point VaR streams start here.
const STREAM_VAR: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub alpha: f64,
    /// Mean-model training rows.
    pub n_f: usize,
    /// Quantile-model rows (`D₁`).
    pub n_h: usize,
    /// Calibration rows (`D₂`).
    pub n_cal: usize,
    /// Unlabelled test covariates given to the ratio estimator.
    pub m_ratio: usize,
    /// Test points scored per replicate.
    pub n_eval: usize,
    pub mean_model: MeanSpec,
    pub quantile_model: QuantileSpec,
    pub ratio: RatioKind,
    pub classifier: ClassifierSpec,
    pub kmm: KmmOptions,
    /// Kernel mean matching runs on this many calibration rows and test
    /// covariates (prefixes of the full samples).
    pub kmm_samples: usize,
    pub clip: Clip,
    pub seed: u64,
    pub replicates: usize,
    /// Cost draws per point for the empirical VaR.
    pub n_mc: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::Toy {
                sigma1: 1.0,
                sigma2: 1.0,
                shift: 0.0,
                shift_kind: ShiftKind::Covariate,
            },
            alpha: 0.8,
            n_f: 2000,
            n_h: 1000,
            n_cal: 1000,
            m_ratio: 4000,
            n_eval: 1000,
            mean_model: MeanSpec::default(),
            quantile_model: QuantileSpec::default(),
            ratio: RatioKind::ClsMlp,
            classifier: ClassifierSpec::default(),
            kmm: KmmOptions::default(),
            kmm_samples: 400,
            clip: Clip::default(),
            seed: 0,
            replicates: 1,
            n_mc: 100,
            out: None,
            format: Format::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0.5, 1)", self.alpha));
        }
        let sizes = [
            ("n_f", self.n_f),
            ("n_h", self.n_h),
            ("n_cal", self.n_cal),
            ("m_ratio", self.m_ratio),
            ("n_eval", self.n_eval),
            ("kmm_samples", self.kmm_samples),
            ("replicates", self.replicates),
            ("n_mc", self.n_mc),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if !(self.kmm.cap > 0.0 && self.kmm.max_iter > 0) {
            return bad("kmm cap and max_iter must be positive".into());
        }
        self.clip.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.scenario.build().map_err(|e| Error::Config(e.to_string()))?;
        if self.ratio == RatioKind::Oracle && !matches!(self.scenario, ScenarioSpec::Toy { .. }) {
            return bad("the oracle ratio exists only for the toy scenario".into());
        }
        Ok(())
    }
}

/// One calibration method compared within a replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    /// Conformal boxes weighted by the given ratio estimate.
    Ours(RatioKind),
    /// One context-free box for every test point.
    BoxBaseline,
}

impl Arm {
    pub fn name(&self) -> &'static str {
        match self {
            Arm::Ours(k) => k.name(),
            Arm::BoxBaseline => "box-baseline",
        }
    }
}

/// Runs `config.replicates` replicates of the configured method.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<Report> {
    run_comparison(config, &[Arm::Ours(config.ratio)])
}

/// Runs every arm on each replicate with shared data, `f̂` and `ĥ`; rows are
/// ordered by replicate, then by arm.
pub fn run_comparison(config: &ExperimentConfig, arms: &[Arm]) -> Result<Report> {
    config.validate()?;
    let per_rep: Vec<Vec<ReportRow>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, config.seed.wrapping_add(r as u64), arms))
        .collect::<Result<_>>()?;
    let mut report = Report::new(per_rep.into_iter().flatten().collect());
    if let ScenarioSpec::Toy {
        sigma1,
        sigma2,
        shift_kind,
        ..
    } = config.scenario
    {
        report.toy_context = Some(crate::report::ToyContext {
            sigma1,
            sigma2,
            kind: shift_kind,
            alpha: config.alpha,
        });
    }
    Ok(report)
}

/// Shared state of one replicate.
struct Replicate {
    scenario: Scenario,
    seed: u64,
    /// Training rows not used for calibration.
    fit_rows: Dataset,
    d2: Dataset,
    f: MeanModel,
    h: QuantileModel,
    eval: Dataset,
}

fn prepare(config: &ExperimentConfig, seed: u64) -> Result<Replicate> {
    let scenario = config.scenario.build().map_err(Error::at("scenario"))?;
    let (n_f, n_h, n_cal) = (config.n_f, config.n_h, config.n_cal);
    let train = scenario
        .sample(n_f + n_h + n_cal, &mut RngStream::new(seed, STREAM_TRAIN), Phase::Train)
        .map_err(Error::at("training sample"))?;
    let d_f = train.slice(0, n_f);
    let d1 = train.slice(n_f, n_f + n_h);
    let d2 = train.slice(n_f + n_h, n_f + n_h + n_cal);
    let f = fit_mean(&d_f, config.mean_model, &mut RngStream::new(seed, STREAM_MEAN)).map_err(Error::at("mean model"))?;
    let r1 = compute_residuals(&d1, &f).map_err(Error::at("mean model"))?;
    let abs_r1 = Matrix::from_fn(r1.rows(), r1.cols(), |i, j| r1[(i, j)].abs());
    let h = fit_quantile(
        &d1.z,
        &abs_r1,
        config.alpha,
        config.quantile_model,
        &mut RngStream::new(seed, STREAM_QUANTILE),
    )
    .map_err(Error::at("quantile model"))?;
    let eval = scenario
        .sample(config.n_eval, &mut RngStream::new(seed, STREAM_EVAL), Phase::Test)
        .map_err(Error::at("evaluation sample"))?;
    Ok(Replicate {
        scenario,
        seed,
        fit_rows: train.slice(0, n_f + n_h),
        d2,
        f,
        h,
        eval,
    })
}

/// Fits the ratio and returns it with the calibration rows it applies to.
fn fit_ratio(config: &ExperimentConfig, rep: &Replicate, kind: RatioKind) -> Result<(RatioModel, Dataset)> {
    let test_z = rep
        .scenario
        .sample(config.m_ratio, &mut RngStream::new(rep.seed, STREAM_RATIO_SAMPLE), Phase::Test)?
        .z;
    let mut rng = RngStream::new(rep.seed, STREAM_RATIO_FIT);
    let kmm_rows = |m: &Matrix| {
        let k = config.kmm_samples.min(m.rows());
        Matrix::from_fn(k, m.cols(), |i, j| m[(i, j)])
    };
    Ok(match kind {
        RatioKind::Trivial => (trivial_ratio(), rep.d2.clone()),
        RatioKind::Oracle => match rep.scenario {
            Scenario::Toy(t) => (gaussian_oracle_ratio(t)?, rep.d2.clone()),
            _ => return Err(Error::Config("the oracle ratio exists only for the toy scenario".into())),
        },
        RatioKind::ClsLinear | RatioKind::ClsMlp => {
            let spec = if kind == RatioKind::ClsLinear {
                ClassifierSpec::Linear
            } else {
                config.classifier
            };
            let model = fit_classifier_ratio(&rep.fit_rows.z, &test_z, spec, config.clip, &mut rng)?;
            (model, rep.d2.clone())
        }
        RatioKind::KmmCov | RatioKind::KmmLabel => {
            let d2 = rep.d2.slice(0, config.kmm_samples.min(rep.d2.len()));
            let test_z = kmm_rows(&test_z);
            let model = if kind == RatioKind::KmmCov {
                fit_kmm_covariate(&d2.z, &test_z, None, &config.kmm, config.clip)?
            } else {
                fit_kmm_label(&d2, &test_z, &config.kmm, config.clip)?
            };
            (model, d2)
        }
    })
}

fn run_replicate(config: &ExperimentConfig, seed: u64, arms: &[Arm]) -> Result<Vec<ReportRow>> {
    let rep = prepare(config, seed)?;
    arms.iter()
        .map(|&arm| {
            let (boxes, eta) = match arm {
                Arm::Ours(kind) => {
                    let (ratio, d2) = fit_ratio(config, &rep, kind).map_err(Error::at("density ratio"))?;
                    let scores = calib_scores(&d2, &rep.f, &rep.h, &ratio).map_err(Error::at("calibration"))?;
                    let calib = select_eta(&scores, config.alpha).map_err(Error::at("calibration"))?;
                    let boxes = (0..rep.eval.len())
                        .map(|i| uncertainty_box(rep.eval.z.row(i), &rep.f, &rep.h, &calib))
                        .collect::<Result<Vec<_>>>()
                        .map_err(Error::at("uncertainty sets"))?;
                    (boxes, calib.eta)
                }
                Arm::BoxBaseline => {
                    let train_c = Matrix::from_fn(rep.fit_rows.len() + rep.d2.len(), rep.d2.dim_c(), |i, j| {
                        if i < rep.fit_rows.len() {
                            rep.fit_rows.c[(i, j)]
                        } else {
                            rep.d2.c[(i - rep.fit_rows.len(), j)]
                        }
                    });
                    let (b, scale) = box_baseline_scaled(&train_c, config.alpha).map_err(Error::at("box baseline"))?;
                    (vec![b; rep.eval.len()], scale)
                }
            };
            evaluate(config, &rep, arm, &boxes, eta).map_err(Error::at("evaluation"))
        })
        .collect()
}

fn evaluate(config: &ExperimentConfig, rep: &Replicate, arm: Arm, boxes: &[BoxSet], eta: f64) -> Result<ReportRow> {
    let n = rep.eval.len();
    let mut covered = [0usize; 2];
    let mut counts = [0usize; 2];
    let mut conservative = 0usize;
    let mut var_sum = 0.0;
    // A context-free box yields one decision for every point.
    let shared = if arm == Arm::BoxBaseline {
        Some(rep.scenario.decide(&boxes[0])?)
    } else {
        None
    };
    for i in 0..n {
        let z = rep.eval.z.row(i);
        let group = usize::from(z[0] > 0.0);
        counts[group] += 1;
        if boxes[i].contains(rep.eval.c.row(i)) {
            covered[group] += 1;
        }
        let decision = match &shared {
            Some(d) => d.clone(),
            None => rep.scenario.decide(&boxes[i])?,
        };
        if let Scenario::Grid(g) = &rep.scenario {
            if !g.is_path(&decision.x) {
                return Err(Error::Domain(format!("robust solution at evaluation point {i} is not a path")));
            }
        }
        if rep.scenario.is_conservative(&decision.x) {
            conservative += 1;
        }
        let mut rng = RngStream::new(rep.seed, STREAM_VAR + i as u64);
        var_sum += empirical_var(&decision.x, z, &rep.scenario, config.alpha, config.n_mc, &mut rng)?;
    }
    let rate = |a: usize, b: usize| if b == 0 { None } else { Some(a as f64 / b as f64) };
    Ok(ReportRow {
        seed: rep.seed,
        scenario: config.scenario.name().to_string(),
        ratio_kind: arm.name().to_string(),
        alpha: config.alpha,
        d: rep.scenario.dim_z(),
        coverage_total: (covered[0] + covered[1]) as f64 / n as f64,
        coverage_z1_neg: rate(covered[0], counts[0]),
        coverage_z1_pos: rate(covered[1], counts[1]),
        p_conservative: match rep.scenario {
            Scenario::Grid(_) => None,
            _ => Some(conservative as f64 / n as f64),
        },
        mean_var: var_sum / n as f64,
        eta: Some(eta),
    })
}

/// Empirical `α`-quantile (order statistic `⌈α·n_mc⌉`) of the realised
/// objective of `x` over `n_mc` test-law cost draws at `z`.
pub fn empirical_var(x: &[f64], z: &[f64], scenario: &Scenario, alpha: f64, n_mc: usize, rng: &mut RngStream) -> Result<f64> {
    if n_mc == 0 {
        return Err(Error::Empty("Monte Carlo sample"));
    }
    let mut values = (0..n_mc)
        .map(|_| Ok(scenario.objective(&scenario.sample_cost(z, rng, Phase::Test)?, x)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(order_statistic_quantile(&mut values, alpha))
}

/// Context-free box around the training-cost mean with the smallest scale
/// whose empirical joint coverage of the training costs reaches `α`.
pub fn box_baseline(train_costs: &Matrix, alpha: f64) -> Result<BoxSet> {
    Ok(box_baseline_scaled(train_costs, alpha)?.0)
}

/// [`box_baseline`] together with its scale.
///
/// Coordinates are measured in units of their training standard deviation
/// (unit spread for constant coordinates), so the box is `mean ± t·sd`.
pub fn box_baseline_scaled(train_costs: &Matrix, alpha: f64) -> Result<(BoxSet, f64)> {
    let (n, k) = (train_costs.rows(), train_costs.cols());
    if n == 0 || k == 0 {
        return Err(Error::Empty("training costs"));
    }
    let mean: Vec<f64> = (0..k).map(|j| (0..n).map(|i| train_costs[(i, j)]).sum::<f64>() / n as f64).collect();
    let sd: Vec<f64> = (0..k)
        .map(|j| {
            let v = (0..n).map(|i| (train_costs[(i, j)] - mean[j]).powi(2)).sum::<f64>() / n as f64;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scores: Vec<f64> = (0..n)
        .map(|i| (0..k).map(|j| (train_costs[(i, j)] - mean[j]).abs() / sd[j]).fold(0.0, f64::max))
        .collect();
    let t = select_eta(&CalibScores::unweighted(scores)?, alpha)?.eta;
    let lower = mean.iter().zip(&sd).map(|(m, s)| m - t * s).collect();
    let upper = mean.iter().zip(&sd).map(|(m, s)| m + t * s).collect();
    Ok((BoxSet::new(lower, upper)?, t))
}

/// Outcome of one built-in consistency check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick end-to-end consistency checks of the numerical building blocks.
pub fn selftest() -> Vec<SelfCheck> {
    use crate::analytic::{oracle_toy_decision, prob_conservative, Method};
    use crate::lp::{solve_lp, LinearProgram};
    use crate::numerics::{normal_cdf, normal_quantile};
    use crate::scenarios::ToyScenario;

    let mut out = Vec::new();
    let mut push = |name, passed, detail: String| out.push(SelfCheck { name, passed, detail });

    let roundtrip = [0.01, 0.2, 0.5, 0.8, 0.999]
        .iter()
        .map(|&p| (normal_cdf(normal_quantile(p).unwrap_or(f64::NAN)) - p).abs())
        .fold(0.0, f64::max);
    push("normal quantile roundtrip", roundtrip < 1e-12, format!("max error {roundtrip:e}"));

    let lp = Matrix::from_rows(&[vec![1.0, 1.0, 1.0]])
        .and_then(|a| LinearProgram::new(vec![-1.0, -2.0, 0.0], a, vec![1.0], vec![0.0; 3], vec![1.0; 3]))
        .and_then(|p| solve_lp(&p));
    match lp {
        Ok(sol) => push("simplex on a simplex", (sol.value + 2.0).abs() < 1e-12, format!("value {}", sol.value)),
        Err(e) => push("simplex on a simplex", false, e.to_string()),
    }

    let eta = CalibScores::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 1.0, 1.0, 5.0])
        .and_then(|s| select_eta(&s, 0.5))
        .map(|c| c.eta);
    push("weighted quantile", matches!(eta, Ok(e) if e == 4.0), format!("{eta:?}"));

    let check = ToyScenario::new(1.0, 1.0, 1.0, ShiftKind::Covariate).and_then(|scn| {
        let exact = prob_conservative(&scn, 0.8, Method::OodRo)?;
        let mut rng = RngStream::new(7, 0);
        let data = scn.sample(20_000, &mut rng, Phase::Test);
        let mut zeros = 0;
        for i in 0..data.len() {
            if oracle_toy_decision(data.z[(i, 0)], &scn, 0.8)? == 0 {
                zeros += 1;
            }
        }
        Ok((exact, zeros as f64 / data.len() as f64))
    });
    match check {
        Ok((exact, mc)) => push(
            "toy closed form vs Monte Carlo",
            (exact - mc).abs() < 0.02,
            format!("closed form {exact:.4}, Monte Carlo {mc:.4}"),
        ),
        Err(e) => push("toy closed form vs Monte Carlo", false, e.to_string()),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_quantile;
    use crate::scenarios::ToyScenario;

    fn small(scenario: ScenarioSpec, ratio: RatioKind) -> ExperimentConfig {
        ExperimentConfig {
            scenario,
            ratio,
            n_f: 300,
            n_h: 200,
            n_cal: 200,
            m_ratio: 300,
            n_eval: 100,
            kmm_samples: 100,
            n_mc: 20,
            mean_model: MeanSpec::Ridge { lambda: 1e-3 },
            quantile_model: QuantileSpec::Linear {
                intercept_only: false,
                epochs: 300,
            },
            classifier: ClassifierSpec::Linear,
            replicates: 2,
            seed: 5,
            ..ExperimentConfig::default()
        }
    }

    fn toy_spec(shift: f64) -> ScenarioSpec {
        ScenarioSpec::Toy {
            sigma1: 1.0,
            sigma2: 1.0,
            shift,
            shift_kind: ShiftKind::Covariate,
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::default();
        assert_eq!((cfg.n_f, cfg.n_h, cfg.n_cal, cfg.m_ratio, cfg.n_eval), (2000, 1000, 1000, 4000, 1000));
        assert!(cfg.validate().is_ok());
        let bad = ExperimentConfig { alpha: 0.5, ..cfg.clone() };
        assert!(bad.validate().unwrap_err().is_config());
        let bad = ExperimentConfig { n_cal: 0, ..cfg.clone() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            scenario: ScenarioSpec::Simple { d: 4, shift: 1.0 },
            ratio: RatioKind::Oracle,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_roundtrip_and_unknown_fields() {
        let cfg = small(toy_spec(1.0), RatioKind::Oracle);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        assert!(ExperimentConfig::from_json(r#"{"alpha": 0.9}"#).is_ok());
        assert!(ExperimentConfig::from_json(r#"{"alpah": 0.9}"#).is_err());
        let parsed = ExperimentConfig::from_json(r#"{"scenario": {"kind": "knapsack"}, "ratio": "kmm-cov"}"#).unwrap();
        assert_eq!(parsed.ratio, RatioKind::KmmCov);
    }

    #[test]
    fn pipeline_rows_are_well_formed_for_every_ratio() {
        for kind in [
            RatioKind::Trivial,
            RatioKind::ClsLinear,
            RatioKind::KmmCov,
            RatioKind::KmmLabel,
            RatioKind::Oracle,
        ] {
            let report = run_pipeline(&small(toy_spec(1.0), kind)).unwrap();
            assert_eq!(report.rows.len(), 2);
            for row in &report.rows {
                assert_eq!(row.ratio_kind, kind.name());
                assert!((0.0..=1.0).contains(&row.coverage_total));
                assert!(row.eta.unwrap() >= 0.0);
                assert!(row.p_conservative.is_some());
            }
            assert_eq!(report.rows[1].seed, 6);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = ExperimentConfig {
            replicates: 3,
            ..small(ScenarioSpec::Simple { d: 2, shift: 1.0 }, RatioKind::ClsLinear)
        };
        let a = run_pipeline(&cfg).unwrap();
        let b = run_pipeline(&cfg).unwrap();
        assert_eq!(a, b);
        // A replicate reproduces alone with its own seed.
        let single = run_pipeline(&ExperimentConfig {
            seed: cfg.seed + 2,
            replicates: 1,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(single.rows[0], a.rows[2]);
    }

    #[test]
    fn stage_attribution_on_failure() {
        let cfg = small(ScenarioSpec::Simple { d: 2, shift: 1.0 }, RatioKind::Oracle);
        let rep = prepare(&cfg, 1).unwrap();
        let err = fit_ratio(&cfg, &rep, RatioKind::Oracle).map_err(Error::at("density ratio")).unwrap_err();
        assert!(err.to_string().starts_with("density ratio:"), "{err}");
        assert!(err.is_config());
    }

    #[test]
    fn comparison_shares_fits_across_arms() {
        let cfg = ExperimentConfig {
            replicates: 1,
            ..small(toy_spec(0.0), RatioKind::Trivial)
        };
        let report = run_comparison(&cfg, &[Arm::Ours(RatioKind::Trivial), Arm::BoxBaseline, Arm::Ours(RatioKind::Trivial)]).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[0], report.rows[2]);
        assert_eq!(report.rows[1].ratio_kind, "box-baseline");
    }

    #[test]
    fn var_examples() {
        let scn = Scenario::Toy(ToyScenario::new(1.0, 1.0, 0.0, ShiftKind::Covariate).unwrap());
        let mut rng = RngStream::new(3, 0);
        assert_eq!(empirical_var(&[0.0], &[0.7], &scn, 0.8, 100, &mut rng).unwrap(), 0.0);
        let z = 0.4;
        let q = normal_quantile(0.8).unwrap();
        let n = 10_000;
        for x in [1.0, -1.0] {
            let v = empirical_var(&[x], &[z], &scn, 0.8, n, &mut rng).unwrap();
            let expect = z * x + q;
            // Standard error of a sample quantile: √(α(1−α)/n) / φ(q).
            let se = (0.8 * 0.2 / n as f64).sqrt() / crate::numerics::normal_pdf(q);
            assert!((v - expect).abs() < 3.0 * se, "x={x}: {v} vs {expect}");
        }
    }

    #[test]
    fn var_of_deterministic_costs() {
        let scn = Scenario::Simple(crate::scenarios::SimpleScenario {
            d: 2,
            shift: 1.0,
            noise_variance: 0.0,
        });
        let mut rng = RngStream::new(11, 0);
        let z = [2.25, -0.3];
        for x in [1.0, -1.0, 0.25] {
            // c = sign(z₁)·√|z₁| = 1.5 exactly.
            assert_eq!(empirical_var(&[x], &z, &scn, 0.8, 100, &mut rng).unwrap(), 1.5 * x);
        }
    }

    #[test]
    fn box_baseline_examples() {
        let mut rng = RngStream::new(9, 0);
        let costs = Matrix::from_fn(500, 3, |_, j| rng.gaussian(j as f64, 1.0 + j as f64));
        let b = box_baseline(&costs, 0.8).unwrap();
        let inside = (0..500).filter(|&i| b.contains(costs.row(i))).count();
        assert!(inside as f64 >= 0.8 * 500.0);
        // Full range at α → 1.
        let b = box_baseline(&costs, 0.999_999).unwrap();
        for j in 0..3 {
            let (lo, hi) = (0..500).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), i| {
                (l.min(costs[(i, j)]), h.max(costs[(i, j)]))
            });
            assert!(b.lower()[j] <= lo + 1e-12 && b.upper()[j] >= hi - 1e-12);
        }
        // 1-d halfwidth is an order statistic of |c − mean|.
        let one = Matrix::from_fn(200, 1, |_, _| rng.gaussian(0.0, 2.0));
        let mean = (0..200).map(|i| one[(i, 0)]).sum::<f64>() / 200.0;
        let mut dev: Vec<f64> = (0..200).map(|i| (one[(i, 0)] - mean).abs()).collect();
        let q = order_statistic_quantile(&mut dev, 0.8);
        let b = box_baseline(&one, 0.8).unwrap();
        let half = 0.5 * (b.upper()[0] - b.lower()[0]);
        assert!((half - q).abs() < 1e-9 * q.max(1.0), "{half} vs {q}");
    }

    #[test]
    fn selftest_passes() {
        for c in selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
