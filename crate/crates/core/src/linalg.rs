//! Dense helpers shared by the certificate and solver code.

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU, Dyn};

/// `(m + mᵀ) / 2`.
pub fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue of a symmetric matrix; `-inf` for an empty matrix.
/// Only the lower triangle is read, so pass [`sym_part`] of anything else.
pub fn max_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix; `+inf` for an empty matrix.
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm2(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Copy `block` into `target` with its top-left corner at `(r, c)`.
pub fn put(target: &mut DMatrix<f64>, r: usize, c: usize, block: &DMatrix<f64>) {
    if block.nrows() == 0 || block.ncols() == 0 {
        return;
    }
    target
        .view_mut((r, c), (block.nrows(), block.ncols()))
        .copy_from(block);
}

/// Block-diagonal stacking of rectangular blocks.
pub fn block_diag<'a>(blocks: impl IntoIterator<Item = &'a DMatrix<f64>>) -> DMatrix<f64> {
    let blocks: Vec<&DMatrix<f64>> = blocks.into_iter().collect();
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        put(&mut out, r, c, b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `max |x_i|`, zero for an empty vector.
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// LU factorization together with a cheap singularity verdict based on the
/// pivot ratio of `U`.
pub struct Factorized {
    lu: LU<f64, Dyn, Dyn>,
}

impl Factorized {
    /// Returns `None` if the smallest pivot is below `1e-13` times the largest.
    pub fn new(m: DMatrix<f64>) -> Option<Self> {
        let dim = m.nrows();
        let lu = m.lu();
        if dim > 0 {
            let u = lu.u();
            let diag = u.diagonal();
            let max = diag.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let min = diag.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
            if !(max > 0.0) || !min.is_finite() || min <= 1e-13 * max {
                return None;
            }
        }
        Some(Self { lu })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        if rhs.len() == 0 {
            return rhs.clone();
        }
        self.lu
            .solve(rhs)
            .expect("factorization was checked to be nonsingular")
    }

    pub fn solve_mat(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        if rhs.nrows() == 0 {
            return rhs.clone();
        }
        self.lu
            .solve(rhs)
            .expect("factorization was checked to be nonsingular")
    }
}
