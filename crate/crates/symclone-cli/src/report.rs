//! Machine- and human-readable output for every command.  JSON is the
//! canonical format; CSV exists only for the closed-form table; `text` is
//! a terminal rendering of the same rows.  Serialization is fully
//! deterministic: field order is declaration order, floats go through the
//! standard shortest-representation formatter, and the elapsed field stays
//! zero unless timing was explicitly requested.

use serde::Serialize;
use symclone::ComplexMatrix;

pub const SCHEMA: &str = "symclone/1";

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

/// The configuration echo embedded in every report.
#[derive(Serialize)]
pub struct ConfigEcho {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub random_channel: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inject_fault: bool,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: ConfigEcho,
    pub results: Vec<ResultRow>,
    pub failures: Vec<String>,
    pub elapsed_ms: u64,
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum ResultRow {
    Table(TableRow),
    Check(CheckRow),
    Clone(Box<CloneRow>),
    Optimize(OptimizeRow),
    Twirl(TwirlRow),
}

/// One spec's closed forms, exact and as decimals.
#[derive(Serialize)]
pub struct TableRow {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub global_fidelity: String,
    pub black_cow: String,
    pub single_clone_fidelity: String,
    pub global_fidelity_decimal: f64,
    pub black_cow_decimal: f64,
    pub single_clone_fidelity_decimal: f64,
}

/// One named invariant check: measured defect against its threshold.
#[derive(Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<f64>,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Serialize)]
pub struct CloneRow {
    pub input_norm: f64,
    pub renormalized: bool,
    /// The normalized input state actually cloned, entries as [re, im].
    pub state: Vec<[f64; 2]>,
    pub fidelity: f64,
    /// Output of the cloner in symmetric coordinates, rows of [re, im].
    pub output_symmetric: Vec<Vec<[f64; 2]>>,
    pub single_clone: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
pub struct OptimizeRow {
    pub best_value: f64,
    pub gap_to_closed_form: f64,
    pub choi_distance_to_optimal: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
}

#[derive(Serialize)]
pub struct TwirlRow {
    pub samples: usize,
    pub source: &'static str,
    pub choi_distance_to_source: f64,
    pub choi_distance_to_optimal: f64,
    pub fidelity_mean: f64,
    pub fidelity_spread: f64,
}

pub fn matrix_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m.get(r, c).re, m.get(r, c).im]).collect())
        .collect()
}

pub fn render_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    text.push('\n');
    text
}

pub const CSV_HEADER: &str = "d,N,M,global_fidelity,black_cow,single_clone_fidelity";

pub fn render_csv(report: &Report) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &report.results {
        if let ResultRow::Table(t) = row {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.d, t.n, t.m, t.global_fidelity, t.black_cow, t.single_clone_fidelity
            ));
        }
    }
    out
}

fn matrix_lines(label: &str, rows: &[Vec<[f64; 2]>], out: &mut String) {
    out.push_str(label);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|[re, im]| format!("{re:+.6}{im:+.6}i"))
            .collect();
        out.push_str(&format!("  [{}]\n", cells.join(", ")));
    }
}

pub fn render_text(report: &Report) -> String {
    let mut out = format!("{} ({})\n", report.command, SCHEMA);
    for row in &report.results {
        match row {
            ResultRow::Table(t) => {
                out.push_str(&format!(
                    "d={} N={} M={}: global {} ({:.6}), black cow {} ({:.6}), single clone {} ({:.6})\n",
                    t.d,
                    t.n,
                    t.m,
                    t.global_fidelity,
                    t.global_fidelity_decimal,
                    t.black_cow,
                    t.black_cow_decimal,
                    t.single_clone_fidelity,
                    t.single_clone_fidelity_decimal
                ));
            }
            ResultRow::Check(c) => {
                let measure = match c.defect {
                    Some(defect) => format!("defect {defect:.3e} vs {:.3e}", c.threshold),
                    None => String::new(),
                };
                let note = c.note.as_deref().unwrap_or("");
                out.push_str(&format!("{:<22} {:<8} {measure} {note}\n", c.name, c.status));
            }
            ResultRow::Clone(c) => {
                out.push_str(&format!(
                    "input norm {} (renormalized: {}), fidelity {:.12}\n",
                    c.input_norm, c.renormalized, c.fidelity
                ));
                matrix_lines("output (symmetric coordinates):", &c.output_symmetric, &mut out);
                matrix_lines("single clone:", &c.single_clone, &mut out);
            }
            ResultRow::Optimize(o) => {
                out.push_str(&format!(
                    "best value {:.12}\ngap to closed form {:.3e}\nChoi distance to optimal {:.3e}\niterations {}\nconverged {}\nfinal residual {:.3e}\n",
                    o.best_value,
                    o.gap_to_closed_form,
                    o.choi_distance_to_optimal,
                    o.iterations,
                    o.converged,
                    o.final_residual
                ));
            }
            ResultRow::Twirl(t) => {
                out.push_str(&format!(
                    "source {}\nsamples {}\nChoi distance to source {:.3e}\nChoi distance to optimal {:.3e}\nfidelity mean {:.12}\nfidelity spread {:.3e}\n",
                    t.source,
                    t.samples,
                    t.choi_distance_to_source,
                    t.choi_distance_to_optimal,
                    t.fidelity_mean,
                    t.fidelity_spread
                ));
            }
        }
    }
    if !report.failures.is_empty() {
        out.push_str(&format!("FAILURES: {}\n", report.failures.join(", ")));
    } else if report.command == "verify" {
        out.push_str("all checks passed\n");
    }
    out
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => render_json(report),
        Format::Csv => render_csv(report),
        Format::Text => render_text(report),
    }
}
