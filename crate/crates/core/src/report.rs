//! Experiment reports and their CSV, JSON and SVG renderings.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{prob_conservative, Method};
use crate::error::{Error, Result};
use crate::scenarios::{ShiftKind, ToyScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 11] = [
    "seed",
    "scenario",
    "ratio_kind",
    "alpha",
    "d",
    "coverage_total",
    "coverage_z1_neg",
    "coverage_z1_pos",
    "p_conservative",
    "mean_var",
    "eta",
];

/// Metrics of one replicate and method. Group coverages are `None` when the
/// group is empty; `p_conservative` is `None` where no decision is
/// conservative by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: u64,
    pub scenario: String,
    pub ratio_kind: String,
    pub alpha: f64,
    pub d: usize,
    pub coverage_total: f64,
    pub coverage_z1_neg: Option<f64>,
    pub coverage_z1_pos: Option<f64>,
    pub p_conservative: Option<f64>,
    pub mean_var: f64,
    pub eta: Option<f64>,
}

/// Per-method medians over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ratio_kind: String,
    pub replicates: usize,
    pub coverage_total: f64,
    pub coverage_z1_neg: Option<f64>,
    pub coverage_z1_pos: Option<f64>,
    pub p_conservative: Option<f64>,
    pub mean_var: f64,
    pub eta: Option<f64>,
}

/// Parameters of the toy world a report came from, used to draw the
/// analytic conservative-probability curves next to the measured bars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyContext {
    pub sigma1: f64,
    pub sigma2: f64,
    pub kind: ShiftKind,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy_context: Option<ToyContext>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

impl Report {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        Self { rows, toy_context: None }
    }

    /// Medians per `ratio_kind`, in order of first appearance.
    pub fn summaries(&self) -> Vec<Summary> {
        let mut kinds: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !kinds.contains(&r.ratio_kind.as_str()) {
                kinds.push(&r.ratio_kind);
            }
        }
        kinds
            .into_iter()
            .map(|kind| {
                let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.ratio_kind == kind).collect();
                let col = |f: &dyn Fn(&ReportRow) -> Option<f64>| median(&mut rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
                Summary {
                    ratio_kind: kind.to_string(),
                    replicates: rows.len(),
                    coverage_total: col(&|r| Some(r.coverage_total)).unwrap_or(f64::NAN),
                    coverage_z1_neg: col(&|r| r.coverage_z1_neg),
                    coverage_z1_pos: col(&|r| r.coverage_z1_pos),
                    p_conservative: col(&|r| r.p_conservative),
                    mean_var: col(&|r| Some(r.mean_var)).unwrap_or(f64::NAN),
                    eta: col(&|r| r.eta),
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).map_err(csv_error)?;
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Vec<ReportRow>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.deserialize().map(|row| row.map_err(csv_error)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            rows: &'a [ReportRow],
            medians: Vec<Summary>,
        }
        Ok(serde_json::to_string_pretty(&Out {
            rows: &self.rows,
            medians: self.summaries(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct In {
            rows: Vec<ReportRow>,
        }
        let parsed: In = serde_json::from_str(text)?;
        Ok(Report::new(parsed.rows))
    }

    /// Coverage bars per method, preceded by the analytic conservative
    /// probability curves when the report comes from the toy world.
    pub fn to_svg(&self) -> Result<String> {
        let mut panels = Vec::new();
        if let Some(ctx) = self.toy_context {
            let shifts: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64).collect();
            panels.push(conservative_panel(ctx.sigma1, ctx.sigma2, ctx.kind, ctx.alpha, &shifts)?);
        }
        panels.push(coverage_panel(&self.summaries()));
        Ok(stack(&panels))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::Svg => self.to_svg(),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Domain(format!("csv: {e}"))
}

/// Writes the report in `format` to `path`.
pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    let text = report.render(format)?;
    std::fs::write(path, text)?;
    Ok(())
}

const W: f64 = 480.0;
const H: f64 = 300.0;
const PAD: f64 = 45.0;

/// One SVG `<g>` panel of size `W × H`.
struct Panel(String);

fn stack(panels: &[Panel]) -> String {
    let height = H * panels.len() as f64;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{height}\" viewBox=\"0 0 {W} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(s, "<g transform=\"translate(0,{})\">\n{}</g>", H * i as f64, p.0);
    }
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(s, "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{title}</text>", W / 2.0);
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - PAD,
        W - 10.0,
        H - PAD
    );
    let _ = writeln!(s, "<line x1=\"{PAD}\" y1=\"30\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>", H - PAD);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>", W / 2.0, H - 8.0);
    let _ = writeln!(
        s,
        "<text x=\"12\" y=\"{}\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">{y_label}</text>",
        H / 2.0,
        H / 2.0
    );
    for t in [0.0, 0.5, 1.0] {
        let y = y_of(t);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{t}</text>", PAD - 4.0, y + 4.0);
    }
}

/// Maps a probability to panel height.
fn y_of(p: f64) -> f64 {
    H - PAD - p * (H - PAD - 30.0)
}

/// Conservative-probability curves of both methods against the shift.
fn conservative_panel(sigma1: f64, sigma2: f64, kind: ShiftKind, alpha: f64, shifts: &[f64]) -> Result<Panel> {
    let mut s = String::new();
    let kind_name = match kind {
        ShiftKind::Covariate => "covariate",
        ShiftKind::Label => "label",
    };
    axes(&mut s, &format!("P(x* = 0), {kind_name} shift, alpha = {alpha}"), "shift s", "P(x* = 0)");
    let s_max = shifts.iter().copied().fold(0.0, f64::max).max(1e-12);
    let x_of = |v: f64| PAD + v / s_max * (W - 10.0 - PAD);
    for (method, colour, label) in [(Method::OodRo, "#1f77b4", "ood-ro"), (Method::WsBall, "#d62728", "worst-case ball")] {
        let mut pts = String::new();
        for &shift in shifts {
            let scn = ToyScenario::new(sigma1, sigma2, shift, kind)?;
            let p = prob_conservative(&scn, alpha, method)?;
            let _ = write!(pts, "{:.2},{:.2} ", x_of(shift), y_of(p));
        }
        let _ = writeln!(
            s,
            "<polyline class=\"{label}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>",
            pts.trim_end()
        );
        let ly = if method == Method::OodRo { 40.0 } else { 55.0 };
        let _ = writeln!(s, "<text x=\"{}\" y=\"{ly}\" fill=\"{colour}\">{label}</text>", W - 120.0);
    }
    for &shift in shifts.iter().step_by(2) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{shift}</text>",
            x_of(shift),
            H - PAD + 14.0
        );
    }
    Ok(Panel(s))
}

/// Median coverage bars (total, z₁ ≤ 0, z₁ > 0) per method.
fn coverage_panel(summaries: &[Summary]) -> Panel {
    let mut s = String::new();
    axes(&mut s, "median test coverage", "method", "coverage");
    let groups = summaries.len().max(1) as f64;
    let slot = (W - 10.0 - PAD) / groups;
    let bar = slot / 4.0;
    let colours = ["#4c72b0", "#55a868", "#c44e52"];
    for (g, sm) in summaries.iter().enumerate() {
        let x0 = PAD + g as f64 * slot + bar / 2.0;
        for (b, v) in [Some(sm.coverage_total), sm.coverage_z1_neg, sm.coverage_z1_pos].into_iter().enumerate() {
            if let Some(v) = v {
                let y = y_of(v.clamp(0.0, 1.0));
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{bar:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    x0 + b as f64 * bar,
                    H - PAD - y,
                    colours[b]
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            x0 + 1.5 * bar,
            H - PAD + 14.0,
            sm.ratio_kind
        );
    }
    for (i, label) in ["total", "z1 <= 0", "z1 > 0"].iter().enumerate() {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{}\">{label}</text>",
            W - 80.0,
            40.0 + 14.0 * i as f64,
            colours[i]
        );
    }
    Panel(s)
}

/// Stand-alone conservative-probability chart over `shifts`.
pub fn conservative_curves_svg(sigma1: f64, sigma2: f64, kind: ShiftKind, alpha: f64, shifts: &[f64]) -> Result<String> {
    Ok(stack(&[conservative_panel(sigma1, sigma2, kind, alpha, shifts)?]))
}
