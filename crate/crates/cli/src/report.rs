//! Report envelopes. One JSON document per invocation, schema versioned,
//! snake_case fields, byte-identical for identical (config, seed)
//! regardless of thread count.

use serde::Serialize;
use sqpc::adversary::{AttackReport, SampledDetection, Theorem1Report};
use sqpc::parties::ALL_CASES;
use sqpc::protocol::RunReport;
use sqpc::sqkd::SqkdResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Envelope<C: Serialize, P: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    /// Seed recorded verbatim; absent for the purely deterministic
    /// `oracle` command.
    pub seed: Option<u64>,
    pub config: C,
    pub report: P,
}

impl<C: Serialize, P: Serialize> Envelope<C, P> {
    pub fn new(command: &'static str, seed: Option<u64>, config: C, report: P) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            seed,
            config,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report types serialize");
        text.push('\n');
        text
    }
}

/// One Monte Carlo estimate, with the oracle value when one exists.
#[derive(Debug, Clone, Serialize)]
pub struct StatSummary {
    pub metric: String,
    pub estimate: f64,
    /// `sqrt(p (1 - p) / n)`; 0 when a single sample or an empty cell
    /// leaves nothing to estimate spread from.
    pub std_error: f64,
    pub samples: u64,
    pub exact_value: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunConfigDoc {
    pub l: usize,
    pub delta: f64,
    pub x: u64,
    pub y: u64,
    pub attack: String,
    pub key_source: String,
    pub threshold: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepConfigDoc {
    pub attack: String,
    pub samples: u64,
}

#[derive(Debug, Serialize)]
pub struct OracleConfigDoc {
    pub attack: String,
}

#[derive(Debug, Serialize)]
pub struct Theorem1ConfigDoc {
    pub grid: usize,
    pub probe_qubits: usize,
    pub detection_eps: f64,
    pub distinguishability_eps: f64,
}

#[derive(Debug, Serialize)]
pub struct SqkdConfigDoc {
    pub l: usize,
    pub check_fraction: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepReportDoc {
    pub oracle: AttackReport,
    pub monte_carlo: SampledDetection,
    pub metrics: Vec<StatSummary>,
    /// Every estimate within four binomial standard errors of its oracle
    /// value (cells with an exact value of 0 or 1 must match exactly).
    pub all_within_four_sigma: bool,
}

#[derive(Debug, Serialize)]
pub struct Theorem1PointDoc {
    pub theta_b: f64,
    pub theta_c: f64,
    pub average_detection: f64,
    pub distinguishability: f64,
    pub verdict: sqpc::adversary::Theorem1Verdict,
}

impl Theorem1PointDoc {
    pub fn from_report(theta_b: f64, theta_c: f64, report: &Theorem1Report) -> Self {
        Theorem1PointDoc {
            theta_b,
            theta_c,
            average_detection: report.detection.average_detection,
            distinguishability: report.distinguishability,
            verdict: report.verdict,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Theorem1ReportDoc {
    pub grid_points: Vec<Theorem1PointDoc>,
    /// Uncomputing-backward attacks along the grid diagonal; all must be
    /// both undetectable and uninformative.
    pub compensated_points: Vec<Theorem1PointDoc>,
    pub violations: usize,
    pub all_consistent: bool,
    pub compensated_all_quiet: bool,
}

#[derive(Debug, Serialize)]
pub enum SqkdReportDoc {
    Established(SqkdResult),
    Aborted { reason: String },
}

/// Flat per-case CSV for spreadsheets: one row per case.
pub fn run_report_csv(report: &RunReport) -> String {
    let mut out = String::from("case,rounds,error_rate\n");
    for case in ALL_CASES {
        let idx = case.index();
        let rate = report.error_rates[idx]
            .map(|r| r.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{case:?},{},{rate}\n", report.case_counts[idx]));
    }
    out
}

pub fn sweep_csv(doc: &SweepReportDoc) -> String {
    let mut out = String::from("metric,estimate,std_error,samples,exact_value\n");
    for m in &doc.metrics {
        let exact = m.exact_value.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{exact}\n",
            m.metric, m.estimate, m.std_error, m.samples
        ));
    }
    out
}

pub fn oracle_csv(report: &AttackReport) -> String {
    let mut out = String::from("case,exact_detection\n");
    for case in ALL_CASES {
        out.push_str(&format!(
            "{case:?},{}\n",
            report.per_case_detection[case.index()]
        ));
    }
    out.push_str(&format!("average,{}\n", report.average_detection));
    out
}
