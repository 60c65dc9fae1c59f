//! Geostatistics kernels for Gaussian random fields on the unit square.
//!
//! - Matérn covariance ([`matern_cov`], [`build_cov_matrix`])
//! - Cholesky-based log-likelihood ([`log_likelihood`]) and its maximization
//!   ([`mle_fit`])
//! - kriging prediction ([`predict`])
//! - tile low-rank compression ([`tlr_compress`], [`tlr_log_likelihood`])
//!
//! Everything is generic over [`Scalar`] (`f32`, `f64`). The `*64` aliases
//! below fix the element type to `f64`, which is what the CLI and the
//! benchmark harness use.

pub mod cholesky;
pub mod covariance;
pub mod dataset;
pub mod error;
pub mod likelihood;
pub mod matrix;
pub mod mle;
pub mod optimize;
pub mod predict;
pub mod scalar;
pub mod special;
pub mod tlr;

pub use cholesky::{cholesky, cholesky_jittered, CholeskyFactor};
pub use covariance::{
    build_cov_matrix, cross_covariance, matern_cov, CovarianceMatrix, CovarianceParams, MaternKernel, Point,
};
pub use dataset::{generate_synthetic, synthesize_measurements, GeoDataset};
pub use error::{GeoError, Result};
pub use likelihood::{log_likelihood, log_likelihood_without_constant, tlr_log_likelihood, Approximation};
pub use matrix::Matrix;
pub use mle::{mle_fit, mle_fit_with, MleOptions, MleResult, ParamBounds};
pub use predict::{predict, predict_with, PredictionProblem};
pub use scalar::Scalar;
pub use tlr::{tlr_compress, tlr_compress_capped, tlr_reconstruct, TlrMatrix};

pub type Matrix64 = Matrix<f64>;
pub type Point64 = Point<f64>;
pub type CovarianceParams64 = CovarianceParams<f64>;
pub type CovarianceMatrix64 = CovarianceMatrix<f64>;
pub type CholeskyFactor64 = CholeskyFactor<f64>;
pub type GeoDataset64 = GeoDataset<f64>;
pub type PredictionProblem64 = PredictionProblem<f64>;
pub type TlrMatrix64 = TlrMatrix<f64>;
pub type MleResult64 = MleResult<f64>;

pub type Matrix32 = Matrix<f32>;
pub type CovarianceParams32 = CovarianceParams<f32>;
pub type GeoDataset32 = GeoDataset<f32>;
