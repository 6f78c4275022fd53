//! Dense and sparse matrix containers plus the factorization primitives the
//! fitting engines are built on: truncated SVD, polar decomposition, and
//! entrywise norms.

mod dense;
mod io;
mod sparse;
mod svd;

pub use dense::DenseMatrix;
pub use io::{read_csv, read_matrix_market, write_csv, write_matrix_market};
pub use sparse::SparseMatrix;
pub use svd::{polar, truncated_svd, SvdResult, RANK_TOLERANCE};

use crate::error::{Error, Result};

/// A data matrix in either dense or sparse storage.
///
/// Fitting routines only touch the matrix through the products and norms
/// below, so sparse inputs never get densified.
#[derive(Debug, Clone)]
pub enum DataMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl DataMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.nrows(),
            DataMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.ncols(),
            DataMatrix::Sparse(m) => m.ncols(),
        }
    }

    /// X · W for a dense W with `self.ncols()` rows.
    pub fn mul_dense(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            DataMatrix::Dense(m) => m.matmul(w),
            DataMatrix::Sparse(m) => m.mul_dense(w),
        }
    }

    /// Xᵀ · W for a dense W with `self.nrows()` rows.
    pub fn tr_mul_dense(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            DataMatrix::Dense(m) => m.tr_matmul(w),
            DataMatrix::Sparse(m) => m.tr_mul_dense(w),
        }
    }

    /// X · v for a vector of length `self.ncols()`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "vector length {} vs {} columns",
                v.len(),
                self.ncols()
            )));
        }
        match self {
            DataMatrix::Dense(m) => Ok(m.mul_vec(v)),
            DataMatrix::Sparse(m) => Ok(m.mul_vec(v)),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match self {
            DataMatrix::Dense(m) => m.fro_norm(),
            DataMatrix::Sparse(m) => m.fro_norm(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            DataMatrix::Dense(m) => m.clone(),
            DataMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

impl From<DenseMatrix> for DataMatrix {
    fn from(m: DenseMatrix) -> Self {
        DataMatrix::Dense(m)
    }
}

impl From<SparseMatrix> for DataMatrix {
    fn from(m: SparseMatrix) -> Self {
        DataMatrix::Sparse(m)
    }
}
