//! Maximum likelihood estimation of `(σ², β, ν)`.

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceParams;
use crate::dataset::GeoDataset;
use crate::error::{GeoError, Result};
use crate::likelihood::{likelihood_terms, Approximation};
use crate::optimize::{maximize, NelderMeadOptions, StopReason};
use crate::scalar::Scalar;

/// Elementwise positive box for `(σ², β, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds<T> {
    pub lower: [T; 3],
    pub upper: [T; 3],
}

impl<T: Scalar> ParamBounds<T> {
    pub fn new(lower: [T; 3], upper: [T; 3]) -> Result<Self> {
        for i in 0..3 {
            if !(lower[i] > T::zero()) || !upper[i].is_finite() || lower[i] > upper[i] {
                return Err(GeoError::InvalidParams(format!(
                    "bound {i} must satisfy 0 < lower <= upper < inf, got [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, theta: &[T; 3]) -> bool {
        (0..3).all(|i| theta[i] >= self.lower[i] && theta[i] <= self.upper[i])
    }
}

impl Default for ParamBounds<f64> {
    fn default() -> Self {
        Self { lower: [0.01, 0.005, 0.1], upper: [10.0, 2.0, 3.0] }
    }
}

#[derive(Debug, Clone)]
pub struct MleOptions {
    pub max_iters: usize,
    pub max_evals: usize,
    pub approximation: Approximation,
    /// Convergence needs the simplex value spread below `ftol` and its
    /// diameter (in log θ) below `xtol`. Zero for both runs the full
    /// iteration budget.
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iters: 1000, max_evals: 500, approximation: Approximation::Dense, ftol: 1e-10, xtol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleIteration<T> {
    pub iteration: usize,
    pub evaluations: usize,
    /// Best log-likelihood so far.
    pub log_likelihood: T,
    pub params: CovarianceParams<T>,
}

#[derive(Debug, Clone)]
pub struct MleResult<T> {
    pub params: CovarianceParams<T>,
    pub log_likelihood: T,
    pub trace: Vec<MleIteration<T>>,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the search ended without a usable optimum; `params` is still
    /// the best point evaluated (or the initial point).
    pub warning: Option<String>,
}

/// Maximizes the log-likelihood with at most `max_iters` optimizer iterations.
pub fn mle_fit<T: Scalar>(
    dataset: &GeoDataset<T>,
    init: &CovarianceParams<T>,
    bounds: &ParamBounds<T>,
    max_iters: usize,
) -> Result<MleResult<T>> {
    mle_fit_with(dataset, init, bounds, &MleOptions { max_iters, ..Default::default() })
}

/// As [`mle_fit`] with full control over budgets and the Σ representation.
///
/// The search runs over `log θ`, so the simplex sees the scale-free geometry
/// of the likelihood surface. Points where Σ is not positive definite count
/// as infeasible.
pub fn mle_fit_with<T: Scalar>(
    dataset: &GeoDataset<T>,
    init: &CovarianceParams<T>,
    bounds: &ParamBounds<T>,
    opts: &MleOptions,
) -> Result<MleResult<T>> {
    init.validate()?;
    if let Approximation::Tlr { nb, .. } = opts.approximation {
        if nb == 0 || dataset.len() % nb != 0 {
            return Err(GeoError::TileSizeMismatch { n: dataset.len(), nb });
        }
    }
    let theta0 = init.theta();
    if !bounds.contains(&theta0) {
        return Err(GeoError::InvalidParams("initial parameters lie outside the bounds".into()));
    }
    let lower: Vec<T> = bounds.lower.iter().map(|v| v.ln()).collect();
    let upper: Vec<T> = bounds.upper.iter().map(|v| v.ln()).collect();
    let x0: Vec<T> = theta0.iter().map(|v| v.ln()).collect();

    let to_params = |x: &[T]| -> CovarianceParams<T> {
        let mut theta = [T::zero(); 3];
        for i in 0..3 {
            // exp(ln(b)) may round just outside the box.
            theta[i] = x[i].exp().max(bounds.lower[i]).min(bounds.upper[i]);
        }
        init.with_theta(theta)
    };
    let objective =
        |x: &[T]| -> Option<T> { likelihood_terms(dataset, &to_params(x), opts.approximation).ok().map(|t| t.value()) };

    let nm = NelderMeadOptions {
        max_iters: opts.max_iters,
        max_evals: opts.max_evals,
        ftol: T::lit(opts.ftol),
        xtol: T::lit(opts.xtol),
        ..Default::default()
    };
    let result = maximize(objective, &x0, &lower, &upper, &nm);

    let trace = result
        .trace
        .iter()
        .map(|r| MleIteration {
            iteration: r.iteration,
            evaluations: r.evaluations,
            log_likelihood: r.best_value,
            params: to_params(&r.best_point),
        })
        .collect();

    let (params, log_likelihood, warning) = match result.value {
        Some(v) => (to_params(&result.point), v, None),
        None => (
            *init,
            T::neg_infinity(),
            Some("no evaluated parameter vector gave a positive-definite covariance".to_string()),
        ),
    };
    let warning = warning.or_else(|| match result.stop {
        StopReason::MaxEvaluations => Some(format!("evaluation budget of {} exhausted", opts.max_evals)),
        _ => None,
    });
    Ok(MleResult {
        params,
        log_likelihood,
        trace,
        evaluations: result.evaluations,
        converged: result.stop == StopReason::Converged,
        warning,
    })
}
