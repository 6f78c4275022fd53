use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::rngutil::standard_normal_vec;

/// Relative threshold below which the smallest singular value marks the
/// input as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Top-k singular triplets: `left` is n-by-k, `right` is p-by-k, both with
/// orthonormal columns; singular values are nonincreasing and nonnegative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvdResult {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdResult {
    /// U · diag(d) · Vᵀ.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut scaled = self.left.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            scaled.scale_column(j, s);
        }
        scaled
            .matmul(&self.right.transpose())
            .expect("conformable by construction")
    }
}

/// Top-k SVD. Dense inputs use a direct decomposition; sparse inputs are
/// touched only through matrix-vector products (block subspace iteration),
/// so very wide or tall adjacency matrices stay cheap.
pub fn truncated_svd(x: &DataMatrix, k: usize) -> Result<SvdResult> {
    let (n, p) = (x.nrows(), x.ncols());
    if k == 0 || k > n.min(p) {
        return Err(Error::RankOutOfRange { k, rows: n, cols: p });
    }
    match x {
        DataMatrix::Dense(m) => dense_truncated_svd(m, k),
        DataMatrix::Sparse(_) => sparse_truncated_svd(x, k),
    }
}

fn dense_truncated_svd(x: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let svd = x.to_nalgebra().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    order.truncate(k);

    let left = DenseMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let right = DenseMatrix::from_fn(vt.ncols(), k, |i, j| vt[(order[j], i)]);
    let singular_values: Vec<f64> = order.iter().map(|&j| s[j]).collect();

    Ok(apply_sign_convention(SvdResult {
        left,
        singular_values,
        right,
    }))
}

// Block subspace iteration with oversampling; the matrix is only used via
// X·W and Xᵀ·W products. Deterministic start so results are reproducible.
fn sparse_truncated_svd(x: &DataMatrix, k: usize) -> Result<SvdResult> {
    let (n, p) = (x.nrows(), x.ncols());
    let q = (k + 6).min(n.min(p));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_517f);
    let normal = standard_normal_vec(&mut rng, p * q);
    let mut v = DenseMatrix::new(p, q, normal)?;

    let mut prev_sigma: Vec<f64> = vec![f64::INFINITY; k];
    let mut q_basis = orthonormalize(&x.mul_dense(&v)?);
    for _ in 0..1000 {
        let z = x.tr_mul_dense(&q_basis)?;
        let (vq, r_diag) = orthonormalize_with_r(&z);
        v = vq;
        q_basis = orthonormalize(&x.mul_dense(&v)?);

        let sigma: Vec<f64> = r_diag.iter().take(k).map(|d| d.abs()).collect();
        let max_change = sigma
            .iter()
            .zip(&prev_sigma)
            .map(|(s, ps)| (s - ps).abs() / s.abs().max(1e-300))
            .fold(0.0f64, f64::max);
        prev_sigma = sigma;
        if max_change < 1e-13 {
            break;
        }
    }

    // Project and finish with a small dense SVD of QᵀX (q-by-p).
    let b = x.tr_mul_dense(&q_basis)?.transpose();
    let small = dense_truncated_svd(&b, k)?;
    let left = q_basis.matmul(&small.left)?;
    Ok(apply_sign_convention(SvdResult {
        left,
        singular_values: small.singular_values,
        right: small.right,
    }))
}

/// Flip each singular pair so the largest-magnitude entry of the right
/// vector is positive. Ties go to the first index.
fn apply_sign_convention(mut svd: SvdResult) -> SvdResult {
    for j in 0..svd.singular_values.len() {
        let mut best = 0;
        let mut best_abs = 0.0f64;
        for i in 0..svd.right.nrows() {
            let a = svd.right.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if svd.right.get(best, j) < 0.0 {
            svd.right.scale_column(j, -1.0);
            svd.left.scale_column(j, -1.0);
        }
    }
    svd
}

/// Polar factor X(XᵀX)^{-1/2}, computed as U·Vᵀ from the thin SVD.
/// Requires full column rank with k <= n.
pub fn polar(x: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, k) = (x.nrows(), x.ncols());
    if k > n {
        return Err(Error::InvalidDimensions(format!(
            "polar input must be tall, got {n}x{k}"
        )));
    }
    let svd = x.to_nalgebra().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0f64, f64::max);
    let s_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if s_max == 0.0 || s_min < RANK_TOLERANCE * s_max {
        return Err(Error::RankDeficient {
            ratio: if s_max == 0.0 { 0.0 } else { s_min / s_max },
        });
    }
    let p = &u * &vt;
    Ok(DenseMatrix::from_nalgebra(&p))
}

fn orthonormalize(m: &DenseMatrix) -> DenseMatrix {
    orthonormalize_with_r(m).0
}

/// Thin QR; returns Q and |diag(R)| (singular value estimates during
/// subspace iteration).
fn orthonormalize_with_r(m: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let qr = m.to_nalgebra().qr();
    let q = qr.q();
    let r = qr.r();
    let diag: Vec<f64> = (0..q.ncols().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .collect();
    (DenseMatrix::from_nalgebra(&q), diag)
}
