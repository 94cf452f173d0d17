//! Efficiency metrics: FLOP accounting, analytic complexity envelopes,
//! wall-clock timing and report assembly.

pub mod analytic;
pub mod flops;
pub mod report;
pub mod timing;

pub use analytic::{analytic_flops, Algorithm, ComplexityParams};
pub use flops::{count_scope, FlopCounter};
pub use report::{build_report, Accuracy, EfficiencyReport, Outcome, ReportDocument, RunConfig};
pub use timing::{time_run, Timing};
