use hpcready_core::{
    build_cov_matrix, cholesky, cross_covariance, generate_synthetic, log_likelihood, predict, CovarianceParams64,
    GeoDataset64, Matrix64, Point64, PredictionProblem64,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

mod common;
use common::*;

#[test]
fn smallest_eigenvalue_positive_with_nugget() {
    let locs = random_locations(50, 11);
    let p = CovarianceParams64::with_nugget(1.0, 0.1, 0.5, 1e-6).unwrap();
    let sigma = build_cov_matrix(&locs, &p).unwrap();
    let eig = SymmetricEigen::new(to_na(sigma.as_matrix()));
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0, "min eigenvalue {min}");
}

#[test]
fn cholesky_residual_on_fixtures() {
    for (seed, (s, b, nu)) in [(1u64, (1.0, 0.1, 0.5)), (2, (2.0, 0.05, 1.3)), (3, (0.5, 0.3, 0.8))] {
        let locs = random_locations(80, seed);
        let sigma = build_cov_matrix(&locs, &theta(s, b, nu)).unwrap();
        let l = cholesky(sigma.as_matrix()).unwrap().into_lower();
        let llt = l.matmul(&l.transpose());
        let res = llt.sub(sigma.as_matrix()).frobenius_norm() / sigma.as_matrix().frobenius_norm();
        assert!(res <= 1e-10, "seed {seed}: residual {res}");
    }
}

#[test]
fn two_point_closed_form() {
    // Σ = [[a, c], [c, a]]: |Σ| = a² − c², Σ⁻¹ = [[a, −c], [−c, a]] / |Σ|.
    let p = CovarianceParams64::with_nugget(1.4, 0.25, 0.9, 0.01).unwrap();
    let s1 = Point64::new(0.1, 0.2);
    let s2 = Point64::new(0.4, 0.6);
    let z = [0.7, -0.3];
    let d = GeoDataset64::new(vec![s1, s2], z.to_vec()).unwrap();
    let a = 1.4 + 0.01;
    let c = hpcready_core::matern_cov(0.5, &p).unwrap();
    let det = a * a - c * c;
    let quad = (a * z[0] * z[0] - 2.0 * c * z[0] * z[1] + a * z[1] * z[1]) / det;
    let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad;
    let got = log_likelihood(&d, &p).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn fifty_point_matches_explicit_inverse() {
    let d = random_dataset(50, 5);
    let p = theta(1.0, 0.1, 0.5);
    let sigma = build_cov_matrix(d.locations(), &p).unwrap();
    let oracle = explicit_log_likelihood(sigma.as_matrix(), d.measurements());
    let got = log_likelihood(&d, &p).unwrap();
    assert!(rel_err(got, oracle) < 1e-8, "{got} vs {oracle}");
}

/// The sample variance of one correlated field has standard deviation
/// about `sqrt(2·tr(Σ²))/n`, far wider than the iid `sqrt(2/n)`.
#[test]
fn synthetic_marginal_variance() {
    let p = theta(1.0, 0.1, 0.5);
    let d = generate_synthetic(2000, &p, 2024).unwrap();
    let z = d.measurements();
    let n = z.len() as f64;
    let var = z.iter().map(|v| v * v).sum::<f64>() / n;
    let sigma = build_cov_matrix(d.locations(), &p).unwrap();
    let tr_sq: f64 = sigma.as_matrix().as_slice().iter().map(|c| c * c).sum();
    let sd = (2.0 * tr_sq).sqrt() / n;
    assert!((var - 1.0).abs() <= 4.0 * sd, "sample variance {var}, sd {sd}");
}

/// Whitening with an independent Cholesky factor leaves iid N(0, 1) draws.
#[test]
fn synthetic_field_has_the_model_covariance() {
    let p = theta(1.0, 0.1, 0.5);
    let d = generate_synthetic(1000, &p, 7).unwrap();
    let sigma = to_na(build_cov_matrix(d.locations(), &p).unwrap().as_matrix());
    let l = sigma.cholesky().expect("Σ is positive definite").l();
    let w = l.solve_lower_triangular(&DVector::from_column_slice(d.measurements())).unwrap();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| v * v).sum::<f64>() / n;
    let lag1 = w.as_slice().windows(2).map(|x| x[0] * x[1]).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() <= 4.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() <= 4.0 * (2.0 / n).sqrt(), "variance {var}");
    assert!(lag1.abs() <= 4.0 / n.sqrt(), "lag-1 correlation {lag1}");
}

#[test]
fn kriging_exact_at_observed_sites() {
    let d = random_dataset(40, 9);
    let p = theta(1.0, 0.1, 0.5);
    let q = vec![d.locations()[3], d.locations()[17], d.locations()[39]];
    let z1 = predict(&PredictionProblem64::new(d.clone(), q), &p).unwrap();
    for (got, idx) in z1.iter().zip([3, 17, 39]) {
        assert!((got - d.measurements()[idx]).abs() < 1e-8);
    }
}

/// Conditional mean of the first block from the precision matrix of the
/// joint (query ∪ observed) covariance: `E[Z₁|Z₂] = −Q₁₁⁻¹·Q₁₂·Z₂`.
fn conditioning_oracle(obs: &GeoDataset64, query: &[Point64], p: &CovarianceParams64) -> Vec<f64> {
    let m = query.len();
    let n = obs.len();
    let mut all: Vec<Point64> = query.to_vec();
    all.extend_from_slice(obs.locations());
    let joint = build_cov_matrix(&all, p).unwrap();
    let q = to_na(joint.as_matrix()).try_inverse().unwrap();
    let q11 = q.view((0, 0), (m, m)).into_owned();
    let q12 = q.view((0, m), (m, n)).into_owned();
    let z2 = DVector::from_column_slice(obs.measurements());
    let mean = -(q11.try_inverse().unwrap() * q12 * z2);
    mean.iter().cloned().collect()
}

#[test]
fn kriging_matches_joint_conditioning() {
    let d = random_dataset(50, 21);
    let query = random_locations(5, 77);
    let p = theta(1.0, 0.1, 0.5);
    let got = predict(&PredictionProblem64::new(d.clone(), query.clone()), &p).unwrap();
    let oracle = conditioning_oracle(&d, &query, &p);
    for (g, o) in got.iter().zip(&oracle) {
        assert!(rel_err(*g, *o) < 1e-8, "{g} vs {o}");
    }
}

#[test]
fn cross_covariance_shape() {
    let a = random_locations(4, 1);
    let b = random_locations(7, 2);
    let c: Matrix64 = cross_covariance(&a, &b, &theta(1.0, 0.2, 1.0)).unwrap();
    assert_eq!((c.rows(), c.cols()), (4, 7));
    let _ = DMatrix::<f64>::zeros(1, 1);
}
