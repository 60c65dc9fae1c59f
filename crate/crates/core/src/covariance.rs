//! Matérn covariance and covariance-matrix assembly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::special::{gamma, BesselK};

/// Matérn parameter vector `θ = (σ², β, ν)` plus an optional nugget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceParams<T> {
    /// Marginal variance σ².
    pub sigma_sq: T,
    /// Spatial range β.
    pub beta: T,
    /// Smoothness ν.
    pub nu: T,
    /// Added to the diagonal only.
    #[serde(default)]
    pub nugget: T,
}

impl<T: Scalar> CovarianceParams<T> {
    pub fn new(sigma_sq: T, beta: T, nu: T) -> Result<Self> {
        Self::with_nugget(sigma_sq, beta, nu, T::zero())
    }

    pub fn with_nugget(sigma_sq: T, beta: T, nu: T, nugget: T) -> Result<Self> {
        let p = Self { sigma_sq, beta, nu, nugget };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma_sq, self.beta, self.nu, self.nugget].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GeoError::InvalidParams("non-finite component".into()));
        }
        if !(self.sigma_sq > T::zero()) {
            return Err(GeoError::InvalidParams(format!("sigma_sq must be > 0, got {}", self.sigma_sq)));
        }
        if !(self.beta > T::zero()) {
            return Err(GeoError::InvalidParams(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.nu > T::zero()) {
            return Err(GeoError::InvalidParams(format!("nu must be > 0, got {}", self.nu)));
        }
        if self.nugget < T::zero() {
            return Err(GeoError::InvalidParams(format!("nugget must be >= 0, got {}", self.nugget)));
        }
        Ok(())
    }

    /// `[σ², β, ν]`, the components estimated by maximum likelihood.
    pub fn theta(&self) -> [T; 3] {
        [self.sigma_sq, self.beta, self.nu]
    }

    pub fn with_theta(&self, theta: [T; 3]) -> Self {
        Self { sigma_sq: theta[0], beta: theta[1], nu: theta[2], nugget: self.nugget }
    }
}

/// A location in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Matérn kernel with the order-dependent constants precomputed.
///
/// `C(d) = σ² · 2^(1−ν)/Γ(ν) · (d/β)^ν · K_ν(d/β)` for `d > 0`, and `σ²` at
/// `d = 0`. The nugget is not part of the kernel.
#[derive(Debug, Clone)]
pub struct MaternKernel<T> {
    params: CovarianceParams<T>,
    scale: T,
    bessel: BesselK<T>,
}

impl<T: Scalar> MaternKernel<T> {
    pub fn new(params: CovarianceParams<T>) -> Result<Self> {
        params.validate()?;
        let nu = params.nu;
        let scale = params.sigma_sq * T::lit(2.0).powf(T::one() - nu) / gamma(nu);
        if !scale.is_finite() {
            return Err(GeoError::InvalidParams(format!("smoothness {nu} out of representable range")));
        }
        Ok(Self { params, scale, bessel: BesselK::new(nu) })
    }

    pub fn params(&self) -> &CovarianceParams<T> {
        &self.params
    }

    /// Covariance at distance `d ≥ 0`.
    pub fn at(&self, d: T) -> Result<T> {
        if !d.is_finite() || d < T::zero() {
            return Err(GeoError::Domain(format!("distance must be finite and >= 0, got {d}")));
        }
        Ok(self.eval_unchecked(d))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, d: T) -> T {
        if d == T::zero() {
            return self.params.sigma_sq;
        }
        let x = d / self.params.beta;
        let v = self.scale * x.powf(self.params.nu) * self.bessel.eval(x);
        if v.is_finite() {
            v
        } else if self.bessel.eval(x) == T::zero() {
            T::zero()
        } else {
            // x^ν K_ν(x) overflowed for x → 0; the limit is σ².
            self.params.sigma_sq
        }
    }
}

/// Matérn covariance between two points a distance `distance` apart.
pub fn matern_cov<T: Scalar>(distance: T, params: &CovarianceParams<T>) -> Result<T> {
    MaternKernel::new(*params)?.at(distance)
}

/// Symmetric positive-definite covariance matrix `Σ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T>(pub Matrix<T>);

impl<T: Scalar> CovarianceMatrix<T> {
    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

/// Fails with [`GeoError::DuplicateLocations`] on the first repeated point.
pub fn check_distinct<T: Scalar>(locations: &[Point<T>]) -> Result<()> {
    let mut order: Vec<usize> = (0..locations.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (locations[a], locations[b]);
        pa.x.partial_cmp(&pb.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(pa.y.partial_cmp(&pb.y).unwrap_or(std::cmp::Ordering::Equal))
    });
    for w in order.windows(2) {
        if locations[w[0]] == locations[w[1]] {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(GeoError::DuplicateLocations(a, b));
        }
    }
    Ok(())
}

/// Builds `Σ_ij = C(‖s_i − s_j‖)` with the nugget added to the diagonal.
///
/// Each unordered pair is evaluated once and mirrored, so the result is
/// bitwise symmetric. Rows are filled in parallel; every entry depends only
/// on its own pair, so the output does not depend on the thread count.
pub fn build_cov_matrix<T: Scalar>(
    locations: &[Point<T>],
    params: &CovarianceParams<T>,
) -> Result<CovarianceMatrix<T>> {
    check_distinct(locations)?;
    let kernel = MaternKernel::new(*params)?;
    let n = locations.len();
    let diag = params.sigma_sq + params.nugget;

    // Lower triangle, row by row.
    let lower: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let si = locations[i];
            let mut row = Vec::with_capacity(i + 1);
            for sj in &locations[..i] {
                row.push(kernel.eval_unchecked(si.distance(sj)));
            }
            row.push(diag);
            row
        })
        .collect();

    let mut m = Matrix::zeros(n, n);
    for (i, row) in lower.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(GeoError::Domain("non-finite covariance entry".into()));
    }
    Ok(CovarianceMatrix(m))
}

/// Cross-covariance between `rows` and `cols` locations (no nugget).
pub fn cross_covariance<T: Scalar>(
    rows: &[Point<T>],
    cols: &[Point<T>],
    params: &CovarianceParams<T>,
) -> Result<Matrix<T>> {
    let kernel = MaternKernel::new(*params)?;
    let data: Vec<T> = rows
        .par_iter()
        .flat_map_iter(|r| cols.iter().map(|c| kernel.eval_unchecked(r.distance(c))).collect::<Vec<_>>())
        .collect();
    Ok(Matrix::from_row_major(rows.len(), cols.len(), data))
}
