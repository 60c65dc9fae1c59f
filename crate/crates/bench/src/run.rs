use std::time::Instant;

use hpcready_core::{
    build_cov_matrix, generate_synthetic, mle_fit_with, predict_with, tlr_compress, Approximation, CovarianceParams64,
    GeoDataset64, MleOptions, ParamBounds, PredictionProblem64,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::plan::{Mode, Operation, PlanCell};
use crate::BenchError;

/// Settings shared by every cell of a run. Two run sets are comparable only
/// if these agree (repetition and warm-up counts may differ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub repetitions: usize,
    /// Discarded runs before the timed ones.
    pub warmup: usize,
    pub seed: u64,
    /// Nelder–Mead iterations per modeling cell, always run in full.
    pub mle_iterations: usize,
    pub tlr_tol: f64,
    /// Generating parameters `(σ², β, ν)`; also used for prediction.
    pub theta: [f64; 3],
    /// Modeling start point.
    pub init: [f64; 3],
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repetitions: 10,
            warmup: 1,
            seed: 0,
            mle_iterations: 10,
            tlr_tol: 1e-9,
            theta: [1.0, 0.1, 0.5],
            init: [0.5, 0.3, 1.0],
        }
    }
}

impl BenchOptions {
    fn same_workload(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.mle_iterations == other.mle_iterations
            && self.tlr_tol.to_bits() == other.tlr_tol.to_bits()
            && self.theta.map(f64::to_bits) == other.theta.map(f64::to_bits)
            && self.init.map(f64::to_bits) == other.init.map(f64::to_bits)
    }

    pub(crate) fn workload_mismatch(&self, other: &Self) -> Option<String> {
        (!self.same_workload(other)).then(|| {
            format!(
                "workload settings differ: seed {} vs {}, mle_iterations {} vs {}, tlr_tol {} vs {}, theta {:?} vs {:?}, init {:?} vs {:?}",
                self.seed,
                other.seed,
                self.mle_iterations,
                other.mle_iterations,
                self.tlr_tol,
                other.tlr_tol,
                self.theta,
                other.theta,
                self.init,
                other.init
            )
        })
    }
}

/// Timings of one cell in one environment. Exactly one of `error` and
/// `output_digest` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    #[serde(flatten)]
    pub cell: PlanCell,
    pub env_label: String,
    pub repetitions: usize,
    /// Wall time of each timed repetition, in seconds.
    pub times_s: Vec<f64>,
    /// SHA-256 over the bit patterns of the computed output, identical for
    /// every repetition.
    pub output_digest: Option<String>,
    /// Optimizer iterations actually run (modeling only).
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl BenchRun {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn mean_s(&self) -> Option<f64> {
        (!self.failed() && !self.times_s.is_empty())
            .then(|| self.times_s.iter().sum::<f64>() / self.times_s.len() as f64)
    }
}

/// Everything a `bench run` writes to its output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSet {
    pub label: String,
    pub options: BenchOptions,
    pub runs: Vec<BenchRun>,
}

impl RunSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::RunFile(e.to_string()))
    }
}

struct Outcome {
    digest: String,
    iterations: Option<usize>,
}

fn digest_values(values: impl IntoIterator<Item = f64>) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn params(theta: [f64; 3]) -> Result<CovarianceParams64, BenchError> {
    CovarianceParams64::new(theta[0], theta[1], theta[2]).map_err(|e| BenchError::Options(e.to_string()))
}

/// Untimed inputs of a cell.
enum Prepared {
    Generation,
    Modeling(GeoDataset64),
    Prediction(PredictionProblem64),
}

fn approximation(cell: &PlanCell, opts: &BenchOptions) -> Result<Approximation, String> {
    match cell.mode {
        Mode::Dense => Ok(Approximation::Dense),
        Mode::Tlr if cell.ts == 0 || cell.n % cell.ts != 0 => {
            Err(format!("tile size {} does not divide matrix order {}", cell.ts, cell.n))
        }
        Mode::Tlr => Ok(Approximation::Tlr { nb: cell.ts, tol: opts.tlr_tol }),
    }
}

/// Query sites are held out of one synthetic field of `n + m` points, `m = ⌈n/10⌉`.
fn prediction_problem(n: usize, theta: &CovarianceParams64, seed: u64) -> Result<PredictionProblem64, String> {
    let m = n.div_ceil(10);
    let total = n + m;
    let all = generate_synthetic(total, theta, seed).map_err(|e| e.to_string())?;
    let stride = total / m;
    let (mut locs, mut z, mut query) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(m));
    for (i, (p, v)) in all.locations().iter().zip(all.measurements()).enumerate() {
        if i % stride == stride - 1 && query.len() < m {
            query.push(*p);
        } else {
            locs.push(*p);
            z.push(*v);
        }
    }
    let observed = GeoDataset64::new(locs, z).map_err(|e| e.to_string())?;
    Ok(PredictionProblem64::new(observed, query))
}

fn prepare(cell: &PlanCell, opts: &BenchOptions, theta: &CovarianceParams64) -> Result<Prepared, String> {
    match cell.operation {
        Operation::Generation => Ok(Prepared::Generation),
        Operation::Modeling => {
            generate_synthetic(cell.n, theta, opts.seed).map(Prepared::Modeling).map_err(|e| e.to_string())
        }
        Operation::Prediction => prediction_problem(cell.n, theta, opts.seed).map(Prepared::Prediction),
    }
}

/// The timed call.
fn execute(
    cell: &PlanCell,
    prepared: &Prepared,
    approx: Approximation,
    opts: &BenchOptions,
    theta: &CovarianceParams64,
    init: &CovarianceParams64,
) -> Result<Outcome, String> {
    let e = |e: hpcready_core::GeoError| e.to_string();
    match prepared {
        Prepared::Generation => {
            let data = generate_synthetic(cell.n, theta, opts.seed).map_err(e)?;
            let mut values: Vec<f64> = data.measurements().to_vec();
            // The TLR pipeline also compresses Σ for the operations downstream.
            if let Approximation::Tlr { nb, tol } = approx {
                let sigma = build_cov_matrix(data.locations(), theta).map_err(e)?;
                let tlr = tlr_compress(&sigma, nb, tol).map_err(e)?;
                values.extend(tlr.ranks().iter().map(|&(_, _, r)| r as f64));
            }
            Ok(Outcome { digest: digest_values(values), iterations: None })
        }
        Prepared::Modeling(data) => {
            let mle = MleOptions {
                max_iters: opts.mle_iterations,
                max_evals: usize::MAX,
                approximation: approx,
                ftol: 0.0,
                xtol: 0.0,
            };
            let fit = mle_fit_with(data, init, &ParamBounds::default(), &mle).map_err(e)?;
            let mut values = fit.params.theta().to_vec();
            values.push(fit.log_likelihood);
            Ok(Outcome { digest: digest_values(values), iterations: Some(fit.trace.len()) })
        }
        Prepared::Prediction(problem) => {
            let z = predict_with(problem, theta, approx).map_err(e)?;
            Ok(Outcome { digest: digest_values(z), iterations: None })
        }
    }
}

fn run_cell(cell: &PlanCell, opts: &BenchOptions, env_label: &str) -> BenchRun {
    let mut run = BenchRun {
        cell: *cell,
        env_label: env_label.to_string(),
        repetitions: opts.repetitions,
        times_s: Vec::with_capacity(opts.repetitions),
        output_digest: None,
        iterations: None,
        error: None,
    };
    let result = (|| -> Result<(), String> {
        let theta = params(opts.theta).map_err(|e| e.to_string())?;
        let init = params(opts.init).map_err(|e| e.to_string())?;
        let approx = approximation(cell, opts)?;
        let prepared = prepare(cell, opts, &theta)?;
        for i in 0..opts.warmup + opts.repetitions {
            let start = Instant::now();
            let out = execute(cell, &prepared, approx, opts, &theta, &init)?;
            let elapsed = start.elapsed().as_secs_f64();
            match &run.output_digest {
                None => {
                    run.output_digest = Some(out.digest);
                    run.iterations = out.iterations;
                }
                Some(d) if *d != out.digest => return Err("output differs between repetitions".into()),
                Some(_) => {}
            }
            if i >= opts.warmup {
                run.times_s.push(elapsed);
            }
        }
        Ok(())
    })();
    if let Err(msg) = result {
        run.error = Some(msg);
        run.output_digest = None;
        run.iterations = None;
        run.times_s.clear();
    }
    run
}

/// Runs every cell sequentially. A failing cell is recorded with its error
/// and the remaining cells still run.
pub fn run_benchmark(plan: &[PlanCell], opts: &BenchOptions, env_label: &str) -> Result<RunSet, BenchError> {
    if opts.repetitions == 0 {
        return Err(BenchError::Options("repetitions must be at least 1".into()));
    }
    params(opts.theta)?;
    params(opts.init)?;
    let runs = plan
        .iter()
        .map(|cell| {
            let run = run_cell(cell, opts, env_label);
            match &run.error {
                Some(e) => tracing::warn!(%cell, "cell failed: {e}"),
                None => tracing::info!(%cell, mean_s = run.mean_s(), "cell done"),
            }
            run
        })
        .collect();
    Ok(RunSet { label: env_label.to_string(), options: opts.clone(), runs })
}
