//! Cost-benefit report rows and their JSON, Markdown and CSV renderings.
//!
//! JSON schema `tensornet.efficiency-report`, version 1:
//!
//! ```text
//! { "schema": "tensornet.efficiency-report", "version": 1, "rows": [Row, ...] }
//! Row = {
//!   "algorithm": string,
//!   "config": { "basis_count", "input_size", "modes", "samples", "rank",
//!               "regularization", "seed" },          // null when not applicable
//!   "dense_parameters": int | null,                  // I^D (or I^D J^D for layers)
//!   "network_parameters": int | null,                // R I D (or Σ R I J R for layers)
//!   "flops": { "analytic": number | null, "measured": int | null },
//!   "wall_clock": { "mean_seconds", "std_seconds" | null, "repeats" } | null,
//!   "accuracy": { "metric": string, "value": number } | null,
//!   "hardware": string,
//!   "outcome": "completed" | "baseline-infeasible",
//!   "energy_kwh": number | null, "co2e_grams": number | null,
//!   "note": string | null
//! }
//! ```
//!
//! Field order is fixed by the struct layout, so identical rows serialize to
//! identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::timing::Timing;
use crate::error::{Error, Result};

pub const SCHEMA: &str = "tensornet.efficiency-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    BaselineInfeasible,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub basis_count: Option<usize>,
    pub input_size: Option<usize>,
    pub modes: Option<usize>,
    pub samples: Option<usize>,
    pub rank: Option<usize>,
    pub regularization: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlopSummary {
    pub analytic: Option<f64>,
    pub measured: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub algorithm: String,
    pub config: RunConfig,
    pub dense_parameters: Option<u64>,
    pub network_parameters: Option<u64>,
    pub flops: FlopSummary,
    pub wall_clock: Option<Timing>,
    pub accuracy: Option<Accuracy>,
    pub hardware: String,
    pub outcome: Outcome,
    /// Externally computed energy use, passed through unchanged.
    pub energy_kwh: Option<f64>,
    pub co2e_grams: Option<f64>,
    pub note: Option<String>,
}

impl EfficiencyReport {
    pub fn new(algorithm: impl Into<String>, config: RunConfig, hardware: impl Into<String>) -> Self {
        Self {
            algorithm: algorithm.into(),
            config,
            dense_parameters: None,
            network_parameters: None,
            flops: FlopSummary::default(),
            wall_clock: None,
            accuracy: None,
            hardware: hardware.into(),
            outcome: Outcome::Completed,
            energy_kwh: None,
            co2e_grams: None,
            note: None,
        }
    }

    /// Marks the row as not applicable; timing and accuracy are dropped.
    pub fn infeasible(mut self, note: impl Into<String>) -> Self {
        self.outcome = Outcome::BaselineInfeasible;
        self.wall_clock = None;
        self.accuracy = None;
        self.flops.measured = None;
        self.note = Some(note.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = &self.wall_clock {
            if t.repeats == 0 {
                return Err(Error::arg("timing with zero repeats"));
            }
            if t.std_seconds.is_some() != (t.repeats >= 2) {
                return Err(Error::arg("standard deviation requires at least two repeats"));
            }
        }
        if self.outcome == Outcome::BaselineInfeasible && (self.wall_clock.is_some() || self.accuracy.is_some()) {
            return Err(Error::arg("baseline-infeasible rows carry no timing or accuracy"));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    schema: &'static str,
    version: u32,
    rows: &'a [EfficiencyReport],
}

/// Rendered report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub json: String,
    pub markdown: String,
    pub csv: String,
}

fn opt_int(v: Option<impl ToString>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn runtime_cell(row: &EfficiencyReport) -> String {
    match (&row.outcome, &row.wall_clock) {
        (Outcome::BaselineInfeasible, _) => "NA".into(),
        (_, None) => "-".into(),
        (_, Some(t)) => match t.std_seconds {
            Some(sd) => format!("{:.4} ± {:.4}", t.mean_seconds, sd),
            None => format!("{:.4}", t.mean_seconds),
        },
    }
}

fn accuracy_cell(row: &EfficiencyReport) -> String {
    match (&row.outcome, &row.accuracy) {
        (Outcome::BaselineInfeasible, _) => "NA".into(),
        (_, None) => "-".into(),
        (_, Some(a)) => format!("{} {:.6e}", a.metric, a.value),
    }
}

fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Completed => "completed",
        Outcome::BaselineInfeasible => "baseline-infeasible",
    }
}

/// Renders rows as a versioned JSON document, a Markdown table and CSV.
pub fn build_report(rows: &[EfficiencyReport]) -> Result<ReportDocument> {
    if rows.is_empty() {
        return Err(Error::arg("report needs at least one row"));
    }
    for r in rows {
        r.validate()?;
    }
    let json = serde_json::to_string_pretty(&JsonDocument {
        schema: SCHEMA,
        version: SCHEMA_VERSION,
        rows,
    })
    .map_err(|e| Error::Format(e.to_string()))?;

    let header = [
        "algorithm",
        "I",
        "J",
        "D",
        "N",
        "R",
        "runtime [s]",
        "dense params",
        "TN params",
        "FLOPs measured",
        "FLOPs analytic",
        "accuracy",
        "outcome",
    ];
    let mut md = String::new();
    let _ = writeln!(md, "| {} |", header.join(" | "));
    let _ = writeln!(md, "|{}", "---|".repeat(header.len()));
    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "algorithm,basis_count,input_size,modes,samples,rank,regularization,seed,mean_seconds,std_seconds,repeats,dense_parameters,network_parameters,flops_measured,flops_analytic,accuracy_metric,accuracy_value,outcome,hardware"
    );
    for r in rows {
        let c = &r.config;
        let cells = [
            r.algorithm.clone(),
            opt_int(c.basis_count),
            opt_int(c.input_size),
            opt_int(c.modes),
            opt_int(c.samples),
            opt_int(c.rank),
            runtime_cell(r),
            opt_int(r.dense_parameters),
            opt_int(r.network_parameters),
            if r.outcome == Outcome::BaselineInfeasible { "NA".into() } else { opt_int(r.flops.measured) },
            r.flops.analytic.map_or_else(|| "-".into(), |a| format!("{a:.3e}")),
            accuracy_cell(r),
            outcome_str(r.outcome).into(),
        ];
        let _ = writeln!(md, "| {} |", cells.join(" | "));

        let f = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:e}"));
        let u = |v: Option<u64>| v.map_or_else(String::new, |x| x.to_string());
        let z = |v: Option<usize>| v.map_or_else(String::new, |x| x.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
            r.algorithm,
            z(c.basis_count),
            z(c.input_size),
            z(c.modes),
            z(c.samples),
            z(c.rank),
            f(c.regularization),
            u(c.seed),
            f(r.wall_clock.as_ref().map(|t| t.mean_seconds)),
            f(r.wall_clock.as_ref().and_then(|t| t.std_seconds)),
            z(r.wall_clock.as_ref().map(|t| t.repeats)),
            u(r.dense_parameters),
            u(r.network_parameters),
            u(r.flops.measured),
            f(r.flops.analytic),
            r.accuracy.as_ref().map_or("", |a| a.metric.as_str()),
            f(r.accuracy.as_ref().map(|a| a.value)),
            outcome_str(r.outcome),
            r.hardware.replace('"', "\"\""),
        );
    }
    Ok(ReportDocument { json, markdown: md, csv })
}
