//! `bench run` and `bench compare`.

use std::fs;
use std::path::PathBuf;

use clap::Subcommand;
use hpcready_bench::{
    compare_runs, emit_report_with, read_plan, run_benchmark, BenchOptions, CompareError, ReportFormat, RunSet,
    CONVENTION,
};

use crate::exit::{CliError, CliResult};

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Time every plan cell in this environment and write a run file.
    Run {
        /// CSV with header operation,mode,n,ts.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        /// Environment label, e.g. native or container.
        #[arg(long)]
        label: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optimizer iterations per modeling cell.
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two run files cell by cell.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Add GFLOP/s columns for modeling cells.
        #[arg(long)]
        flops: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> CliResult<RunSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    RunSet::from_json(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

pub fn run(cmd: BenchCommand) -> CliResult {
    match cmd {
        BenchCommand::Run { plan, reps, warmup, label, seed, iterations, tol, out } => {
            let file = fs::File::open(&plan).map_err(|e| CliError::invalid(format!("{}: {e}", plan.display())))?;
            let cells = read_plan(file).map_err(CliError::invalid)?;
            let opts = BenchOptions {
                repetitions: reps,
                warmup,
                seed,
                mle_iterations: iterations,
                tlr_tol: tol,
                ..Default::default()
            };
            let set = run_benchmark(&cells, &opts, &label).map_err(CliError::invalid)?;
            fs::write(&out, set.to_json() + "\n").map_err(|e| CliError::write(format!("{}: {e}", out.display())))?;
            for r in &set.runs {
                match (&r.error, r.mean_s()) {
                    (Some(e), _) => eprintln!("{} FAILED {e}", r.cell),
                    (None, Some(m)) => eprintln!("{} mean {m:.6} s over {}", r.cell, r.times_s.len()),
                    (None, None) => {}
                }
            }
            let failed = set.runs.iter().filter(|r| r.failed()).count();
            if failed > 0 {
                return Err(CliError::failed(format!("{failed} of {} cells failed", set.runs.len())));
            }
            Ok(())
        }
        BenchCommand::Compare { baseline, candidate, format, flops, out } => {
            let (a, b) = (load(&baseline)?, load(&candidate)?);
            let report = compare_runs(&a, &b).map_err(|e| match e {
                CompareError::PlanMismatch(_) => CliError::invalid(e),
                CompareError::OutputMismatch { .. } => CliError::failed(e),
            })?;
            let text = emit_report_with(&report, format, flops);
            if format == ReportFormat::Csv {
                eprintln!("{CONVENTION}");
            }
            match out {
                Some(p) => fs::write(&p, text).map_err(|e| CliError::write(format!("{}: {e}", p.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}
