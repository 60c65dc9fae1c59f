use serde_json::json;

use crate::compare::{ComparisonReport, ComparisonRow, CONVENTION};
use crate::plan::Operation;

pub const CSV_HEADER: &str = "operation,mode,n,ts,baseline_mean_s,candidate_mean_s,variation_pct";
const FAILED: &str = "failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown report format {s:?} (csv or json)")),
        }
    }
}

/// `n³/3` flops over the mean time, in GFLOP/s. Modeling cells only, where
/// the Cholesky factorization dominates.
pub fn gflops(row: &ComparisonRow, mean_s: Option<f64>) -> Option<f64> {
    let t = mean_s?;
    (row.operation == Operation::Modeling).then(|| (row.n as f64).powi(3) / 3.0 / t / 1e9)
}

pub fn emit_report(report: &ComparisonReport, format: ReportFormat) -> String {
    emit_report_with(report, format, false)
}

/// Floats are written in shortest round-trip form, so CSV and JSON carry
/// the same values. `flops` appends `baseline_gflops,candidate_gflops`.
pub fn emit_report_with(report: &ComparisonReport, format: ReportFormat, flops: bool) -> String {
    match format {
        ReportFormat::Csv => csv(report, flops),
        ReportFormat::Json => json(report, flops),
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv(report: &ComparisonReport, flops: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    if flops {
        out.push_str(",baseline_gflops,candidate_gflops");
    }
    out.push('\n');
    for r in &report.rows {
        let variation = r.variation_pct.map(|v| v.to_string()).unwrap_or_else(|| FAILED.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            r.operation,
            r.mode,
            r.n,
            r.ts,
            num(r.baseline_mean_s),
            num(r.candidate_mean_s),
            variation
        ));
        if flops {
            out.push_str(&format!(",{},{}", num(gflops(r, r.baseline_mean_s)), num(gflops(r, r.candidate_mean_s))));
        }
        out.push('\n');
    }
    out
}

fn json(report: &ComparisonReport, flops: bool) -> String {
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = json!({
                "operation": r.operation,
                "mode": r.mode,
                "n": r.n,
                "ts": r.ts,
                "baseline_mean_s": r.baseline_mean_s,
                "candidate_mean_s": r.candidate_mean_s,
                "variation_pct": r.variation_pct,
                "status": if r.failed() { FAILED } else { "ok" },
            });
            if flops {
                v["baseline_gflops"] = json!(gflops(r, r.baseline_mean_s));
                v["candidate_gflops"] = json!(gflops(r, r.candidate_mean_s));
            }
            v
        })
        .collect();
    let doc = json!({
        "convention": CONVENTION,
        "baseline": report.baseline_label,
        "candidate": report.candidate_label,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n"
}
