//! Tile low-rank (TLR) representation of covariance matrices.
//!
//! Diagonal tiles are kept dense. Every off-diagonal tile is replaced by a
//! truncated SVD `U·Vᵀ` whose discarded singular-value energy stays below a
//! relative Frobenius threshold.

use rayon::prelude::*;

use crate::covariance::CovarianceMatrix;
use crate::error::{GeoError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Thin singular value decomposition `A = U·diag(s)·Vᵀ`, values descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub singular_values: Vec<T>,
    pub v: Matrix<T>,
}

const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD of a `m × n` matrix with `m ≥ n`.
///
/// Orthogonalizes column pairs of a working copy until every pair is
/// numerically orthogonal; column norms are then the singular values.
pub fn jacobi_svd<T: Scalar>(a: &Matrix<T>) -> Svd<T> {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "jacobi_svd needs rows >= cols");
    // Column-major working storage.
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut vcols: Vec<Vec<T>> =
        (0..n).map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a2 = T::zero();
                    let mut b2 = T::zero();
                    let mut g = T::zero();
                    for (&x, &y) in cp.iter().zip(cq) {
                        a2 += x * x;
                        b2 += y * y;
                        g += x * y;
                    }
                    (a2, b2, g)
                };
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = (T::one() + t * t).sqrt().recip();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, T)> =
        cols.iter().map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).enumerate().collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));

    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (k, &(j, sv)) in order.iter().enumerate() {
        singular_values.push(sv);
        for i in 0..m {
            u[(i, k)] = if sv > T::zero() { cols[j][i] / sv } else { T::zero() };
        }
        for i in 0..n {
            v[(i, k)] = vcols[j][i];
        }
    }
    Svd { u, singular_values, v }
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Rank-`k` factors of one off-diagonal tile: `tile ≈ U·Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankTile<T> {
    /// `nb × k`, left singular vectors scaled by the singular values.
    pub u: Matrix<T>,
    /// `nb × k`, right singular vectors.
    pub v: Matrix<T>,
}

impl<T: Scalar> LowRankTile<T> {
    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let (r, c, k) = (self.u.rows(), self.v.rows(), self.rank());
        Matrix::from_fn(r, c, |i, j| (0..k).fold(T::zero(), |acc, l| acc + self.u[(i, l)] * self.v[(j, l)]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tile<T> {
    Dense(Matrix<T>),
    LowRank(LowRankTile<T>),
}

/// Square matrix stored as a `p × p` grid of `nb × nb` tiles.
#[derive(Debug, Clone, PartialEq)]
pub struct TlrMatrix<T> {
    nb: usize,
    grid: usize,
    tiles: Vec<Tile<T>>,
}

impl<T: Scalar> TlrMatrix<T> {
    pub fn tile_size(&self) -> usize {
        self.nb
    }

    /// Tiles per side.
    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.nb * self.grid
    }

    pub fn tile(&self, i: usize, j: usize) -> &Tile<T> {
        &self.tiles[i * self.grid + j]
    }

    /// Rank of every off-diagonal tile, row-major over the grid.
    pub fn ranks(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.grid {
            for j in 0..self.grid {
                if let Tile::LowRank(t) = self.tile(i, j) {
                    out.push((i, j, t.rank()));
                }
            }
        }
        out
    }

    /// Stored scalars, versus `n²` for the dense matrix.
    pub fn storage_len(&self) -> usize {
        self.tiles
            .iter()
            .map(|t| match t {
                Tile::Dense(m) => m.rows() * m.cols(),
                Tile::LowRank(lr) => lr.u.rows() * lr.rank() + lr.v.rows() * lr.rank(),
            })
            .sum()
    }
}

/// Smallest `k` whose trailing singular-value energy `sqrt(Σ_{i≥k} s_i²)` is
/// at most `threshold`.
fn truncation_rank<T: Scalar>(singular_values: &[T], threshold: T) -> usize {
    let mut trailing = T::zero();
    let mut k = singular_values.len();
    // Walk from the smallest value upward while the tail stays within bounds.
    while k > 0 {
        let s = singular_values[k - 1];
        let next = trailing + s * s;
        if next.sqrt() > threshold {
            break;
        }
        trailing = next;
        k -= 1;
    }
    k
}

fn compress_tile<T: Scalar>(tile: &Matrix<T>, tol: T, max_rank: Option<usize>) -> LowRankTile<T> {
    let svd = jacobi_svd(tile);
    let norm = tile.frobenius_norm();
    let mut k = truncation_rank(&svd.singular_values, tol * norm);
    if let Some(cap) = max_rank {
        k = k.min(cap);
    }
    let nb_r = tile.rows();
    let nb_c = tile.cols();
    let u = Matrix::from_fn(nb_r, k, |i, l| svd.u[(i, l)] * svd.singular_values[l]);
    let v = Matrix::from_fn(nb_c, k, |i, l| svd.v[(i, l)]);
    LowRankTile { u, v }
}

/// Compresses every off-diagonal tile so that
/// `‖tile − U·Vᵀ‖_F ≤ tol·‖tile‖_F`. Fails unless `nb` divides `n`.
pub fn tlr_compress<T: Scalar>(sigma: &CovarianceMatrix<T>, nb: usize, tol: T) -> Result<TlrMatrix<T>> {
    compress(sigma.as_matrix(), nb, tol, None)
}

/// As [`tlr_compress`], additionally capping every tile rank at `max_rank`.
/// The tolerance bound no longer holds once the cap binds.
pub fn tlr_compress_capped<T: Scalar>(
    sigma: &CovarianceMatrix<T>,
    nb: usize,
    tol: T,
    max_rank: usize,
) -> Result<TlrMatrix<T>> {
    compress(sigma.as_matrix(), nb, tol, Some(max_rank))
}

fn compress<T: Scalar>(a: &Matrix<T>, nb: usize, tol: T, max_rank: Option<usize>) -> Result<TlrMatrix<T>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(GeoError::DimensionMismatch("TLR needs a square matrix".into()));
    }
    if nb == 0 || n % nb != 0 {
        return Err(GeoError::TileSizeMismatch { n, nb });
    }
    if !(tol >= T::zero()) {
        return Err(GeoError::Domain(format!("tolerance must be >= 0, got {tol}")));
    }
    let grid = n / nb;
    let tiles = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            let block = a.block(i * nb, j * nb, nb, nb);
            if i == j {
                Tile::Dense(block)
            } else {
                Tile::LowRank(compress_tile(&block, tol, max_rank))
            }
        })
        .collect();
    Ok(TlrMatrix { nb, grid, tiles })
}

/// Assembles the dense matrix represented by the tiles.
pub fn tlr_reconstruct<T: Scalar>(tlr: &TlrMatrix<T>) -> CovarianceMatrix<T> {
    let nb = tlr.nb;
    let mut m = Matrix::zeros(tlr.n(), tlr.n());
    for i in 0..tlr.grid {
        for j in 0..tlr.grid {
            match tlr.tile(i, j) {
                Tile::Dense(d) => m.set_block(i * nb, j * nb, d),
                Tile::LowRank(lr) => m.set_block(i * nb, j * nb, &lr.to_dense()),
            }
        }
    }
    CovarianceMatrix(m)
}
