use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Coordinate-format sparse matrix. Triplets are kept sorted by (row, col);
/// stored values are nonzero and duplicate coordinates are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!("{rows}x{cols}")));
        }
        let mut seen = HashSet::with_capacity(triplets.len());
        for &(i, j, v) in &triplets {
            if i >= rows || j >= cols {
                return Err(Error::IndexOutOfBounds {
                    row: i,
                    col: j,
                    rows,
                    cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if v == 0.0 {
                return Err(Error::ExplicitZero(i, j));
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateCoordinate(i, j));
            }
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Self {
            rows,
            cols,
            triplets,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.triplets
            .binary_search_by(|t| (t.0, t.1).cmp(&(i, j)))
            .map(|k| self.triplets[k].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.triplets {
            m.set(i, j, v);
        }
        m
    }

    /// self · W for dense W.
    pub fn mul_dense(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != w.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows,
                self.cols,
                w.nrows(),
                w.ncols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, w.ncols());
        for &(i, j, v) in &self.triplets {
            for l in 0..w.ncols() {
                out.set(i, l, out.get(i, l) + v * w.get(j, l));
            }
        }
        Ok(out)
    }

    /// selfᵀ · W for dense W.
    pub fn tr_mul_dense(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != w.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "({}x{})^T * {}x{}",
                self.rows,
                self.cols,
                w.nrows(),
                w.ncols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, w.ncols());
        for &(i, j, v) in &self.triplets {
            for l in 0..w.ncols() {
                out.set(j, l, out.get(j, l) + v * w.get(i, l));
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(i, j, x) in &self.triplets {
            out[i] += x * v[j];
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.triplets.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt()
    }
}
