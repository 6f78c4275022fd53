//! Orthogonal rotations that concentrate loading mass: the varimax
//! criterion with a gradient-projection solver, the quartimax criterion,
//! and the experimental absmin (l1-minimizing) rotation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{polar, DenseMatrix};

/// Which rotation the fitting engines apply inside the PRS step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    Varimax,
    Absmin,
}

/// Outcome of an orthogonal rotation search.
///
/// `rotation` is k-by-k orthogonal and `rotated = input · rotation`.
/// The trace is nondecreasing for varimax (accepted ascent steps only) and
/// nonincreasing for absmin (best-so-far l1 values).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationResult {
    pub rotation: DenseMatrix,
    pub rotated: DenseMatrix,
    pub criterion_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Rows that could not be Kaiser-normalized (zero norm) and were left
    /// unscaled.
    pub unscaled_rows: Vec<usize>,
}

/// Sum over columns of the sample variance of squared elements:
/// sum_j [ (1/p) sum_i A_ij^4 - (1/p^2) (sum_i A_ij^2)^2 ].
pub fn varimax_criterion(a: &DenseMatrix) -> f64 {
    let p = a.nrows() as f64;
    let mut total = 0.0;
    for j in 0..a.ncols() {
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        for i in 0..a.nrows() {
            let v = a.get(i, j);
            s2 += v * v;
            s4 += v * v * v * v;
        }
        total += s4 / p - (s2 / p) * (s2 / p);
    }
    total
}

/// The entrywise l4 norm to the fourth power, sum A_ij^4.
pub fn quartimax_criterion(a: &DenseMatrix) -> f64 {
    a.data().iter().map(|v| v * v * v * v).sum()
}

/// Maximizes the varimax criterion of Y·R over orthogonal R by gradient
/// projection with backtracking step halving. With `kaiser_normalize`,
/// rows are scaled to unit length before the search; the returned rotated
/// matrix is always on the original row scales.
pub fn varimax_rotate(
    y: &DenseMatrix,
    kaiser_normalize: bool,
    tol: f64,
    max_iter: usize,
) -> Result<RotationResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let k = y.ncols();
    if k == 1 {
        return Ok(RotationResult {
            rotation: DenseMatrix::identity(1),
            rotated: y.clone(),
            criterion_trace: vec![varimax_criterion(y)],
            iterations: 0,
            converged: true,
            unscaled_rows: Vec::new(),
        });
    }

    let mut unscaled_rows = Vec::new();
    let working = if kaiser_normalize {
        let mut w = y.clone();
        for i in 0..y.nrows() {
            let norm = y.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                unscaled_rows.push(i);
            } else {
                for j in 0..k {
                    w.set(i, j, y.get(i, j) / norm);
                }
            }
        }
        w
    } else {
        y.clone()
    };

    let mut rotation = DenseMatrix::identity(k);
    let mut rotated = working.clone();
    let mut criterion = varimax_criterion(&rotated);
    let mut trace = vec![criterion];
    let mut step = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        let gradient = rotation_gradient(&working, &rotated)?;
        let gnorm = gradient.fro_norm();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        // normalized ascent direction: the raw gradient carries a 1/p^2
        // scale, so stepping along it directly would crawl for large p
        let direction = gradient.scale(1.0 / gnorm);
        // Backtracking: project R + step*D to the orthogonal group, halve
        // the step until the criterion improves.
        let mut improved = false;
        while step >= 1e-16 {
            let candidate = match polar(&rotation.add(&direction.scale(step))?) {
                Ok(r) => r,
                Err(_) => {
                    step *= 0.5;
                    continue;
                }
            };
            let cand_rotated = working.matmul(&candidate)?;
            let cand_criterion = varimax_criterion(&cand_rotated);
            if cand_criterion > criterion {
                let gain = cand_criterion - criterion;
                rotation = candidate;
                rotated = cand_rotated;
                criterion = cand_criterion;
                trace.push(criterion);
                improved = true;
                iterations += 1;
                step = (step * 2.0).min(16.0);
                if gain <= tol * criterion.abs().max(1.0) {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    Ok(RotationResult {
        rotated: y.matmul(&rotation)?,
        rotation,
        criterion_trace: trace,
        iterations,
        converged,
        unscaled_rows,
    })
}

// d/dL of the varimax criterion at L = Y·R, pulled back to R: G = Yᵀ dC/dL
// with dC/dL = (4/p) (L∘L∘L − L diag(s/p)), s_j = sum_i L_ij².
fn rotation_gradient(y: &DenseMatrix, rotated: &DenseMatrix) -> Result<DenseMatrix> {
    let p = rotated.nrows() as f64;
    let k = rotated.ncols();
    let mut col_sq: Vec<f64> = vec![0.0; k];
    for j in 0..k {
        for i in 0..rotated.nrows() {
            let v = rotated.get(i, j);
            col_sq[j] += v * v;
        }
    }
    let grad_l = DenseMatrix::from_fn(rotated.nrows(), k, |i, j| {
        let v = rotated.get(i, j);
        (4.0 / p) * (v * v * v - v * col_sq[j] / p)
    });
    y.tr_matmul(&grad_l)
}

/// Fixed-budget projected subgradient descent on ||Y·R||_1 over orthogonal
/// R, using the direction Yᵀ·sign(Y·R) and polar projection. No convergence
/// guarantee; the best iterate by l1 value is returned and the trace holds
/// the best-so-far values.
pub fn absmin_rotate(y: &DenseMatrix, iters: usize) -> Result<RotationResult> {
    if iters == 0 {
        return Err(Error::InvalidParameter("absmin iters must be >= 1".into()));
    }
    let tol = 1e-6;
    let k = y.ncols();
    let sqrt_k = (k as f64).sqrt();

    let mut rotation = DenseMatrix::identity(k);
    let mut best_rotation = rotation.clone();
    let mut current_l1 = y.l1_norm();
    let mut best_l1 = current_l1;
    let mut trace = vec![best_l1];
    let mut converged = false;

    for t in 1..=iters {
        let rotated = y.matmul(&rotation)?;
        let sign = rotated.map(|v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        });
        let gradient = y.tr_matmul(&sign)?;
        let gnorm = gradient.fro_norm();
        if gnorm > 0.0 {
            let step = 0.1 * sqrt_k / (gnorm * (t as f64).sqrt());
            if let Ok(projected) = polar(&rotation.sub(&gradient.scale(step))?) {
                rotation = projected;
            }
        }
        let new_l1 = y.matmul(&rotation)?.l1_norm();
        if new_l1 < best_l1 {
            best_l1 = new_l1;
            best_rotation = rotation.clone();
        }
        trace.push(best_l1);
        if (new_l1 - current_l1).abs() < tol * current_l1.max(1.0) {
            converged = true;
        }
        current_l1 = new_l1;
    }

    Ok(RotationResult {
        rotated: y.matmul(&best_rotation)?,
        rotation: best_rotation,
        criterion_trace: trace,
        iterations: iters,
        converged,
        unscaled_rows: Vec::new(),
    })
}
