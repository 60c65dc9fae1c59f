//! Timing harness for the three geostatistics operations (generation,
//! modeling, prediction).
//!
//! A plan is a list of cells `(operation, mode, n, ts)`. [`run_benchmark`]
//! times each cell over a number of repetitions in one environment and
//! records a digest of the computed output. [`compare_runs`] pairs two such
//! run sets (say native and containerized), refuses to compare unless the
//! outputs are bitwise equal, and reports the percent variation of the mean
//! times. The sign convention is [`CONVENTION`]: positive means the
//! candidate is faster.

mod compare;
mod plan;
mod report;
mod run;

pub use compare::{compare_runs, variation_pct, CompareError, ComparisonReport, ComparisonRow, CONVENTION};
pub use plan::{read_plan, write_plan, Mode, Operation, PlanCell};
pub use report::{emit_report, emit_report_with, gflops, ReportFormat, CSV_HEADER};
pub use run::{run_benchmark, BenchOptions, BenchRun, RunSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("plan: {0}")]
    Plan(String),
    #[error("options: {0}")]
    Options(String),
    #[error("run file: {0}")]
    RunFile(String),
}
