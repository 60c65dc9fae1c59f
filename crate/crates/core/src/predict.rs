//! Kriging: conditional mean `Z₁ = Σ₁₂·Σ₂₂⁻¹·Z₂` of a zero-mean field.

use crate::cholesky::cholesky;
use crate::covariance::{cross_covariance, CovarianceParams, Point};
use crate::dataset::GeoDataset;
use crate::error::Result;
use crate::likelihood::Approximation;
use crate::scalar::Scalar;

/// Observed data `Z₂` (size n) and `m` query sites for `Z₁`.
#[derive(Debug, Clone)]
pub struct PredictionProblem<T> {
    pub observed: GeoDataset<T>,
    /// May coincide with observed sites.
    pub query_locations: Vec<Point<T>>,
}

impl<T: Scalar> PredictionProblem<T> {
    pub fn new(observed: GeoDataset<T>, query_locations: Vec<Point<T>>) -> Self {
        Self { observed, query_locations }
    }
}

/// Predicts `Z₁` at the query sites with a dense Σ₂₂.
///
/// `Σ₂₂` carries the nugget on its diagonal; the `m × n` cross-covariance
/// `Σ₁₂` does not. `Σ₂₂⁻¹·Z₂` is obtained from the Cholesky factor by a
/// forward and a backward substitution.
pub fn predict<T: Scalar>(problem: &PredictionProblem<T>, params: &CovarianceParams<T>) -> Result<Vec<T>> {
    predict_with(problem, params, Approximation::Dense)
}

pub fn predict_with<T: Scalar>(
    problem: &PredictionProblem<T>,
    params: &CovarianceParams<T>,
    approx: Approximation,
) -> Result<Vec<T>> {
    let sigma22 = approx.covariance(&problem.observed, params)?;
    let factor = cholesky(sigma22.as_matrix())?;
    let alpha = factor.solve(problem.observed.measurements());
    let sigma12 = cross_covariance(&problem.query_locations, problem.observed.locations(), params)?;
    Ok(sigma12.matvec(&alpha))
}
