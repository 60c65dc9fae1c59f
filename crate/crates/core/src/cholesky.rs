use crate::error::{GeoError, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::Scalar;

/// Lower-triangular factor `L` with `Σ = L·Lᵀ` and a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor<T> {
    l: Matrix<T>,
}

impl<T: Scalar> CholeskyFactor<T> {
    pub fn n(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn into_lower(self) -> Matrix<T> {
        self.l
    }

    /// `log|Σ| = 2 Σ log L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.n()).map(|i| self.l[(i, i)].ln()).sum::<T>() * two
    }

    /// Solves `L·w = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n(), "rhs length differs from factor order");
        let mut w = Vec::with_capacity(b.len());
        for i in 0..self.n() {
            let row = self.l.row(i);
            let s = b[i] - dot(&row[..i], &w);
            w.push(s / row[i]);
        }
        w
    }

    /// Solves `Lᵀ·x = w`.
    pub fn solve_upper(&self, w: &[T]) -> Vec<T> {
        assert_eq!(w.len(), self.n(), "rhs length differs from factor order");
        let n = self.n();
        let mut x = w.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[(i, i)];
            let xi = x[i];
            // Column i of Lᵀ above the diagonal is row i of L left of it.
            for (xj, &lij) in x[..i].iter_mut().zip(&self.l.row(i)[..i]) {
                *xj -= lij * xi;
            }
        }
        x
    }

    /// Solves `Σ·x = b` with one forward and one backward substitution.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L·v`.
    pub fn mul_lower(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n());
        (0..self.n()).map(|i| dot(&self.l.row(i)[..=i], &v[..=i])).collect()
    }
}

/// Cholesky–Banachiewicz factorization.
///
/// Only the lower triangle of `a` is read; the caller guarantees symmetry.
/// Fails with [`GeoError::NotPositiveDefinite`] at the first pivot that is not
/// strictly positive.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Result<CholeskyFactor<T>> {
    if !a.is_square() {
        return Err(GeoError::DimensionMismatch(format!("{}x{} matrix is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = {
                let (li, lj) = (l.row(i), l.row(j));
                a[(i, j)] - dot(&li[..j], &lj[..j])
            };
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(GeoError::NotPositiveDefinite { pivot: i });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(CholeskyFactor { l })
}

/// Factorizes `a + jitter·I` without copying `a` twice.
pub fn cholesky_jittered<T: Scalar>(a: &Matrix<T>, jitter: T) -> Result<CholeskyFactor<T>> {
    if jitter == T::zero() {
        return cholesky(a);
    }
    let mut shifted = a.clone();
    for i in 0..shifted.rows().min(shifted.cols()) {
        shifted[(i, i)] += jitter;
    }
    cholesky(&shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        let f = cholesky(&Matrix::<f64>::identity(4)).unwrap();
        assert_eq!(f.lower(), &Matrix::identity(4));
        assert_eq!(f.log_det(), 0.0);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let f = cholesky(&a).unwrap();
        let l = f.lower();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15_f64);
        assert!((f.log_det() - 8f64.ln()).abs() < 1e-14_f64);
    }

    #[test]
    fn indefinite_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(cholesky(&a), Err(GeoError::NotPositiveDefinite { pivot: 1 }));
        let z = Matrix::<f64>::zeros(2, 2);
        assert_eq!(cholesky(&z), Err(GeoError::NotPositiveDefinite { pivot: 0 }));
    }

    #[test]
    fn solves_agree_with_matrix() {
        let a = Matrix::<f64>::from_rows(&[vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 2.0]]);
        let f = cholesky(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve(&b);
        let back = a.matvec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        let w = f.solve_lower(&b);
        let lw = f.mul_lower(&w);
        for (u, v) in lw.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::from_rows(&[vec![4.0f32, 2.0], vec![2.0, 3.0]]);
        let f = cholesky(&a).unwrap();
        assert!((f.lower()[(1, 1)] - 2f32.sqrt()).abs() < 1e-6);
    }
}
