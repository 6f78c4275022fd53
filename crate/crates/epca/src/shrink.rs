//! l1-constrained shrinkage: entrywise soft-thresholding with the threshold
//! found by bisection, equivalent to Euclidean projection onto the l1 ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;

/// Result of a soft-threshold shrink. Every output entry satisfies
/// |out_ij| = max(|in_ij| - threshold, 0) with the original sign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkResult {
    pub matrix: DenseMatrix,
    pub threshold: f64,
    pub attained_l1: f64,
    pub bisection_steps: usize,
    /// Columns shrunk to all zeros. Retained, never re-initialized; a
    /// nonempty set usually signals a too-small budget.
    pub zero_columns: Vec<usize>,
}

/// Shrinks Y to the entrywise l1 ball of radius `gamma`.
///
/// If ||Y||_1 <= gamma the constraint is inactive and Y is returned with
/// threshold 0. Otherwise the threshold t is bisected on [0, max|Y_ij|]
/// until | ||T_t(Y)||_1 - gamma | <= eps * max(1, gamma). The output is the
/// Euclidean projection of Y onto the ball.
pub fn soft_threshold(y: &DenseMatrix, gamma: f64, eps: f64) -> Result<ShrinkResult> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be > 0")));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
    }
    let total_l1 = y.l1_norm();
    if total_l1 <= gamma {
        return Ok(ShrinkResult {
            zero_columns: zero_columns(y),
            matrix: y.clone(),
            threshold: 0.0,
            attained_l1: total_l1,
            bisection_steps: 0,
        });
    }

    let tolerance = eps * gamma.max(1.0);
    let mut lo = 0.0f64;
    let mut hi = y.max_abs();
    let mut threshold;
    let mut steps = 0;
    // l1 after thresholding is continuous and strictly decreasing to 0 on
    // the bracket, so bisection always has a root.
    loop {
        steps += 1;
        threshold = 0.5 * (lo + hi);
        let attained = shrunk_l1(y, threshold);
        if (attained - gamma).abs() <= tolerance || steps >= 200 {
            break;
        }
        if attained > gamma {
            lo = threshold;
        } else {
            hi = threshold;
        }
    }

    let matrix = y.map(|v| v.signum() * (v.abs() - threshold).max(0.0));
    let attained_l1 = matrix.l1_norm();
    Ok(ShrinkResult {
        zero_columns: zero_columns(&matrix),
        matrix,
        threshold,
        attained_l1,
        bisection_steps: steps,
    })
}

fn shrunk_l1(y: &DenseMatrix, t: f64) -> f64 {
    y.data().iter().map(|v| (v.abs() - t).max(0.0)).sum()
}

fn zero_columns(m: &DenseMatrix) -> Vec<usize> {
    (0..m.ncols())
        .filter(|&j| (0..m.nrows()).all(|i| m.get(i, j) == 0.0))
        .collect()
}

/// Per-column sin^2 of the included angle between columns of Y and Yhat.
/// An all-zero Yhat column deviates maximally (sin^2 = 1).
pub fn column_deviation(y: &DenseMatrix, yhat: &DenseMatrix) -> Result<Vec<f64>> {
    if y.nrows() != yhat.nrows() || y.ncols() != yhat.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            y.nrows(),
            y.ncols(),
            yhat.nrows(),
            yhat.ncols()
        )));
    }
    let mut out = Vec::with_capacity(y.ncols());
    for j in 0..y.ncols() {
        let mut dot = 0.0;
        let mut ny = 0.0;
        let mut nh = 0.0;
        for i in 0..y.nrows() {
            let a = y.get(i, j);
            let b = yhat.get(i, j);
            dot += a * b;
            ny += a * a;
            nh += b * b;
        }
        if ny == 0.0 {
            return Err(Error::InvalidParameter(format!("column {j} of Y is zero")));
        }
        if nh == 0.0 {
            out.push(1.0);
            continue;
        }
        let cos = (dot / (ny.sqrt() * nh.sqrt())).clamp(-1.0, 1.0);
        out.push(1.0 - cos * cos);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inactive_constraint_is_identity() {
        let y = DenseMatrix::identity(2);
        let res = soft_threshold(&y, 2.0, 1e-10).unwrap();
        assert_eq!(res.matrix, y);
        assert_eq!(res.threshold, 0.0);
        assert_eq!(res.bisection_steps, 0);
    }

    #[test]
    fn identity_to_half_budget() {
        // 2(1 - t) = 1 => t = 0.5
        let y = DenseMatrix::identity(2);
        let res = soft_threshold(&y, 1.0, 1e-12).unwrap();
        assert!((res.threshold - 0.5).abs() < 1e-9);
        assert!((res.matrix.get(0, 0) - 0.5).abs() < 1e-9);
        assert!((res.matrix.get(1, 1) - 0.5).abs() < 1e-9);
        assert!((res.attained_l1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_parameters() {
        let y = DenseMatrix::identity(2);
        assert!(soft_threshold(&y, 0.0, 1e-10).is_err());
        assert!(soft_threshold(&y, 1.0, 0.0).is_err());
    }

    #[test]
    fn idempotent_at_same_budget() {
        let y = DenseMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let first = soft_threshold(&y, 2.0, 1e-12).unwrap();
        let second = soft_threshold(&first.matrix, 2.0, 1e-12).unwrap();
        assert_eq!(second.threshold, 0.0);
        assert_eq!(second.matrix, first.matrix);
    }

    #[test]
    fn threshold_monotone_in_gamma() {
        let y = DenseMatrix::from_fn(8, 2, |i, j| ((i * 2 + j) as f64 * 0.61).cos());
        let mut prev_t = f64::INFINITY;
        let mut prev_l1 = 0.0;
        for gamma in [1.0, 2.0, 3.0, 5.0] {
            let res = soft_threshold(&y, gamma, 1e-12).unwrap();
            assert!(res.threshold <= prev_t + 1e-12);
            assert!(res.attained_l1 >= prev_l1 - 1e-12);
            prev_t = res.threshold;
            prev_l1 = res.attained_l1;
        }
    }

    #[test]
    fn flags_zero_columns() {
        let y = DenseMatrix::new(2, 2, vec![10.0, 0.01, 10.0, -0.01]).unwrap();
        let res = soft_threshold(&y, 1.0, 1e-12).unwrap();
        assert_eq!(res.zero_columns, vec![1]);
    }

    #[test]
    fn deviation_examples() {
        let y = DenseMatrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(column_deviation(&y, &y).unwrap(), vec![0.0]);

        let yhat = DenseMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let dev = column_deviation(&y, &yhat).unwrap();
        assert!((dev[0] - 1.0).abs() < 1e-12);

        let zero = DenseMatrix::zeros(2, 1);
        assert_eq!(column_deviation(&y, &zero).unwrap(), vec![1.0]);
    }

    #[test]
    fn deviation_shape_mismatch() {
        let y = DenseMatrix::identity(2);
        let z = DenseMatrix::identity(3);
        assert!(column_deviation(&y, &z).is_err());
    }
}
