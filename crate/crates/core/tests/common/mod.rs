//! Dense linear-algebra oracles built on nalgebra, independent of the
//! crate's own Cholesky/SVD code paths.
#![allow(dead_code)]

use hpcready_core::{CovarianceParams64, GeoDataset64, Matrix64, Point64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_na(m: &Matrix64) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// ℓ(θ) from the explicit inverse and LU determinant.
pub fn explicit_log_likelihood(sigma: &Matrix64, z: &[f64]) -> f64 {
    let s = to_na(sigma);
    let n = z.len() as f64;
    let det = s.clone().lu().determinant();
    let inv = s.try_inverse().expect("singular oracle matrix");
    let zv = DVector::from_column_slice(z);
    let quad = (zv.transpose() * inv * &zv)[(0, 0)];
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad
}

pub fn random_locations(n: usize, seed: u64) -> Vec<Point64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Point64::new(rng.random(), rng.random())).collect()
}

pub fn morton_locations(n: usize, seed: u64) -> Vec<Point64> {
    let mut pts = random_locations(n, seed);
    hpcready_core::dataset::sort_morton(&mut pts);
    pts
}

pub fn random_dataset(n: usize, seed: u64) -> GeoDataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let z = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    GeoDataset64::new(random_locations(n, seed), z).unwrap()
}

pub fn theta(s: f64, b: f64, nu: f64) -> CovarianceParams64 {
    CovarianceParams64::new(s, b, nu).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
