use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::plan::{Mode, Operation, PlanCell};
use crate::run::RunSet;

pub const CONVENTION: &str = "variation_pct = (baseline_mean_s - candidate_mean_s) / baseline_mean_s * 100; \
                              positive means the candidate is faster";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompareError {
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),
    /// Seed discipline violated: the environments computed different numbers.
    #[error("output of {cell} differs between environments ({baseline} vs {candidate})")]
    OutputMismatch { cell: PlanCell, baseline: String, candidate: String },
}

/// Percent change of the mean time; positive when `candidate < baseline`.
pub fn variation_pct(baseline_mean: f64, candidate_mean: f64) -> f64 {
    (baseline_mean - candidate_mean) / baseline_mean * 100.0
}

/// `None` means and variation mark a cell that failed in either environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub operation: Operation,
    pub mode: Mode,
    pub n: usize,
    pub ts: usize,
    pub baseline_mean_s: Option<f64>,
    pub candidate_mean_s: Option<f64>,
    pub variation_pct: Option<f64>,
}

impl ComparisonRow {
    pub fn cell(&self) -> PlanCell {
        PlanCell::new(self.operation, self.mode, self.n, self.ts)
    }

    pub fn failed(&self) -> bool {
        self.variation_pct.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_label: String,
    pub candidate_label: String,
    pub rows: Vec<ComparisonRow>,
}

/// Compares cell by cell in baseline order. Both sets must cover the same
/// cells with the same workload settings, and every cell that succeeded in
/// both must have produced bitwise identical output.
pub fn compare_runs(baseline: &RunSet, candidate: &RunSet) -> Result<ComparisonReport, CompareError> {
    if let Some(why) = baseline.options.workload_mismatch(&candidate.options) {
        return Err(CompareError::PlanMismatch(why));
    }
    let cand: BTreeMap<PlanCell, _> = candidate.runs.iter().map(|r| (r.cell, r)).collect();
    let base: BTreeMap<PlanCell, _> = baseline.runs.iter().map(|r| (r.cell, r)).collect();
    if base.len() != baseline.runs.len() || cand.len() != candidate.runs.len() {
        return Err(CompareError::PlanMismatch("a run set lists the same cell twice".into()));
    }
    if let Some(c) = base.keys().find(|c| !cand.contains_key(c)) {
        return Err(CompareError::PlanMismatch(format!("{c} missing from the candidate")));
    }
    if let Some(c) = cand.keys().find(|c| !base.contains_key(c)) {
        return Err(CompareError::PlanMismatch(format!("{c} missing from the baseline")));
    }

    let mut rows = Vec::with_capacity(baseline.runs.len());
    for b in &baseline.runs {
        let c = cand[&b.cell];
        if let (Some(db), Some(dc)) = (&b.output_digest, &c.output_digest) {
            if db != dc {
                return Err(CompareError::OutputMismatch { cell: b.cell, baseline: db.clone(), candidate: dc.clone() });
            }
        }
        let (bm, cm) = (b.mean_s(), c.mean_s());
        let variation = match (bm, cm) {
            (Some(x), Some(y)) => Some(variation_pct(x, y)),
            _ => None,
        };
        let failed = variation.is_none();
        rows.push(ComparisonRow {
            operation: b.cell.operation,
            mode: b.cell.mode,
            n: b.cell.n,
            ts: b.cell.ts,
            baseline_mean_s: bm.filter(|_| !failed),
            candidate_mean_s: cm.filter(|_| !failed),
            variation_pct: variation,
        });
    }
    Ok(ComparisonReport { baseline_label: baseline.label.clone(), candidate_label: candidate.label.clone(), rows })
}
