//! Command-line front end for the experiment harness.
//!
//! Exit status: 0 on success, 1 for configuration errors (bad flags, bad
//! config file), 2 when a run fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oodro::density_ratio::RatioKind;
use oodro::harness::{run_pipeline, selftest, ExperimentConfig};
use oodro::report::{emit_report, Format};
use oodro::scenarios::{ScenarioSpec, ShiftKind};
use oodro::Error;

#[derive(Debug, Parser)]
#[command(name = "oodro", version, about = "Out-of-distribution robust contextual LP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scalar toy problem with Gaussian covariate or label shift.
    Toy(RunArgs),
    /// Multi-dimensional covariate problem with a square-root cost.
    Simple(RunArgs),
    /// Robust shortest path on a 5×5 grid.
    ShortestPath(RunArgs),
    /// Robust fractional knapsack.
    Knapsack(RunArgs),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with a full experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shift: Option<f64>,
    /// Toy scenario only.
    #[arg(long, value_enum)]
    shift_kind: Option<ShiftArg>,
    #[arg(long, value_enum)]
    ratio: Option<RatioArg>,
    /// Covariate dimension, simple scenario only.
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    replicates: Option<u32>,
    /// Report destination; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShiftArg {
    Covariate,
    Label,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RatioArg {
    Trivial,
    ClsLinear,
    ClsMlp,
    KmmCov,
    KmmLabel,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<ShiftArg> for ShiftKind {
    fn from(a: ShiftArg) -> Self {
        match a {
            ShiftArg::Covariate => ShiftKind::Covariate,
            ShiftArg::Label => ShiftKind::Label,
        }
    }
}

impl From<RatioArg> for RatioKind {
    fn from(a: RatioArg) -> Self {
        match a {
            RatioArg::Trivial => RatioKind::Trivial,
            RatioArg::ClsLinear => RatioKind::ClsLinear,
            RatioArg::ClsMlp => RatioKind::ClsMlp,
            RatioArg::KmmCov => RatioKind::KmmCov,
            RatioArg::KmmLabel => RatioKind::KmmLabel,
            RatioArg::Oracle => RatioKind::Oracle,
        }
    }
}

impl From<FormatArg> for Format {
    fn from(a: FormatArg) -> Self {
        match a {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

fn default_scenario(command: &Command) -> ScenarioSpec {
    let defaults = match command {
        Command::Toy(_) => r#"{"kind": "toy"}"#,
        Command::Simple(_) => r#"{"kind": "simple"}"#,
        Command::ShortestPath(_) => r#"{"kind": "shortest_path"}"#,
        Command::Knapsack(_) | Command::Selftest => r#"{"kind": "knapsack"}"#,
    };
    serde_json::from_str(defaults).expect("scenario defaults parse")
}

/// Merges the config file, subcommand and flags into one configuration.
fn build_config(command: &Command, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)?;
            let expected = default_scenario(command).name();
            if cfg.scenario.name() != expected {
                return Err(Error::Config(format!(
                    "config describes a {} scenario but the subcommand runs {expected}",
                    cfg.scenario.name()
                )));
            }
            cfg
        }
        None => ExperimentConfig {
            scenario: default_scenario(command),
            ..ExperimentConfig::default()
        },
    };
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r as usize;
    }
    if let Some(r) = args.ratio {
        cfg.ratio = r.into();
    }
    if let Some(f) = args.format {
        cfg.format = f.into();
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    match &mut cfg.scenario {
        ScenarioSpec::Toy { shift, shift_kind, .. } => {
            if let Some(s) = args.shift {
                *shift = s;
            }
            if let Some(k) = args.shift_kind {
                *shift_kind = k.into();
            }
        }
        ScenarioSpec::Simple { d, shift } => {
            if let Some(s) = args.shift {
                *shift = s;
            }
            if let Some(v) = args.d {
                *d = v as usize;
            }
        }
        ScenarioSpec::ShortestPath { shift, .. } | ScenarioSpec::Knapsack { shift, .. } => {
            if let Some(s) = args.shift {
                *shift = s;
            }
        }
    }
    if args.shift_kind.is_some() && !matches!(cfg.scenario, ScenarioSpec::Toy { .. }) {
        return Err(Error::Config("--shift-kind applies to the toy scenario only".into()));
    }
    if args.d.is_some() && !matches!(cfg.scenario, ScenarioSpec::Simple { .. }) {
        return Err(Error::Config("--d applies to the simple scenario only".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: &Command, args: &RunArgs) -> Result<(), Error> {
    let cfg = build_config(command, args)?;
    let report = run_pipeline(&cfg)?;
    match &cfg.out {
        Some(path) => {
            emit_report(&report, cfg.format, path)?;
            for s in report.summaries() {
                println!(
                    "{} {}: median coverage {:.3} over {} replicate(s), wrote {}",
                    cfg.scenario.name(),
                    s.ratio_kind,
                    s.coverage_total,
                    s.replicates,
                    path.display()
                );
            }
        }
        None => print!("{}", report.render(cfg.format)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let args = match &cli.command {
        Command::Selftest => {
            let checks = selftest();
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return ExitCode::from(if ok { 0 } else { 2 });
        }
        Command::Toy(a) | Command::Simple(a) | Command::ShortestPath(a) | Command::Knapsack(a) => a,
    };
    match run(&cli.command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
