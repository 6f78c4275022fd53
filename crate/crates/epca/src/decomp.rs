//! The fitting engines: the Polar-Rotate-Shrink step, SCA (sparse loadings),
//! SMA (sparse loadings and scores), sparse coding via the transposed data
//! matrix, optimal and diagonal centers, and variance metrics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{truncated_svd, DataMatrix, DenseMatrix, RANK_TOLERANCE};
use crate::rotate::{absmin_rotate, varimax_rotate, RotationKind};
use crate::shrink::soft_threshold;

const SHRINK_EPS: f64 = 1e-10;
const VARIMAX_TOL: f64 = 1e-6;
const VARIMAX_MAX_ITER: usize = 1000;
const ABSMIN_ITERS: usize = 15;

/// Fit configuration shared by SCA and SMA.
///
/// `gamma` bounds ||Y||_1 (default sqrt(p*k)); `gamma_z` bounds ||Z||_1 in
/// SMA (default sqrt(n*k)). The useful range for an l1 budget on a Stiefel
/// factor with p rows is [k, k*sqrt(p)]: above it the constraint is
/// inactive, below it no orthonormal matrix is feasible. Values outside
/// the range produce a warning, values below 1 an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub gamma: Option<f64>,
    pub gamma_z: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub rotation: RotationKind,
    pub kaiser_normalize: bool,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            gamma: None,
            gamma_z: None,
            tol: 1e-5,
            max_iter: 1000,
            rotation: RotationKind::Varimax,
            kaiser_normalize: false,
            seed: 0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_gamma_z(mut self, gamma_z: f64) -> Self {
        self.gamma_z = Some(gamma_z);
        self
    }
}

/// A fitted sparse decomposition X ~ Z·B·Yᵀ.
///
/// Components are sorted by explained variance (nonincreasing) and each
/// loading column is sign-flipped so its largest-magnitude entry is
/// positive, with the center adjusted to keep B = ZᵀXY.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaFit {
    /// p-by-k sparse loadings Y.
    pub loadings: DenseMatrix,
    /// n-by-k orthonormal scores basis Z.
    pub scores_basis: DenseMatrix,
    /// k-by-k center B = ZᵀXY.
    pub center: DenseMatrix,
    /// ||X y_j||² per component, nonincreasing.
    pub component_ev: Vec<f64>,
    /// Proportion of variance explained by the loading column space.
    pub pve: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Loading columns that shrank to all zeros.
    pub zero_columns: Vec<usize>,
    /// The l1 budget actually used (echoes the default when unset).
    pub gamma_used: f64,
    pub warnings: Vec<String>,
}

/// An SMA fit; like [`ScaFit`] but Z is also l1-constrained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmaFit {
    pub fit: ScaFit,
    pub gamma_z_used: f64,
    /// Score-basis columns that shrank to all zeros.
    pub zero_score_columns: Vec<usize>,
}

/// Polar-Rotate-Shrink: left singular vectors of A, rotated toward
/// sparsity, then soft-thresholded to the l1 budget.
pub fn prs(
    a: &DenseMatrix,
    gamma: f64,
    rotation: RotationKind,
    kaiser_normalize: bool,
) -> Result<DenseMatrix> {
    let k = a.ncols();
    let svd = truncated_svd(&a.clone().into(), k)?;
    let s_max = svd.singular_values[0];
    let s_min = svd.singular_values[k - 1];
    if s_max == 0.0 || s_min < RANK_TOLERANCE * s_max {
        return Err(Error::RankDeficient {
            ratio: if s_max == 0.0 { 0.0 } else { s_min / s_max },
        });
    }
    let rotated = match rotation {
        RotationKind::Varimax => {
            varimax_rotate(&svd.left, kaiser_normalize, VARIMAX_TOL, VARIMAX_MAX_ITER)?.rotated
        }
        RotationKind::Absmin => absmin_rotate(&svd.left, ABSMIN_ITERS)?.rotated,
    };
    Ok(soft_threshold(&rotated, gamma, SHRINK_EPS)?.matrix)
}

/// Sparse component analysis: alternates Y <- PRS(XᵀZ) and Z <- polar(XY)
/// from an SVD initialization until the objective ||ZᵀXY||_F stabilizes.
pub fn sca(x: &DataMatrix, config: &FitConfig) -> Result<ScaFit> {
    let p = x.ncols();
    validate_input(x, config.k)?;
    let mut warnings = Vec::new();
    let gamma = resolve_gamma(config.gamma, p, config.k, "gamma", &mut warnings)?;

    let init = truncated_svd(x, config.k)?;
    let mut z = init.left;
    let mut y = init.right;
    let mut objective = center_of(x, &z, &y)?.fro_norm();
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        iterations += 1;
        let xtz = x.tr_mul_dense(&z)?;
        y = prs(&xtz, gamma, config.rotation, config.kaiser_normalize)?;
        z = polar_lenient(&x.mul_dense(&y)?);
        let new_objective = center_of(x, &z, &y)?.fro_norm();
        trace.push(new_objective);
        let done = (new_objective - objective).abs() <= config.tol * objective.max(1.0);
        objective = new_objective;
        if done {
            converged = true;
            break;
        }
    }

    finish_fit(x, z, y, trace, iterations, converged, gamma, warnings)
}

/// Sparse matrix approximation: PRS on both factors, Z first
/// (Z <- PRS(XY, gamma_z), Y <- PRS(XᵀZ, gamma_y)).
pub fn sma(x: &DataMatrix, config: &FitConfig) -> Result<SmaFit> {
    let (n, p) = (x.nrows(), x.ncols());
    validate_input(x, config.k)?;
    let mut warnings = Vec::new();
    let gamma_y = resolve_gamma(config.gamma, p, config.k, "gamma", &mut warnings)?;
    let gamma_z = resolve_gamma(config.gamma_z, n, config.k, "gamma_z", &mut warnings)?;

    let init = truncated_svd(x, config.k)?;
    let mut z = init.left;
    let mut y = init.right;
    let mut objective = center_of(x, &z, &y)?.fro_norm();
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        iterations += 1;
        let xy = x.mul_dense(&y)?;
        z = prs(&xy, gamma_z, config.rotation, config.kaiser_normalize)?;
        let xtz = x.tr_mul_dense(&z)?;
        y = prs(&xtz, gamma_y, config.rotation, config.kaiser_normalize)?;
        let new_objective = center_of(x, &z, &y)?.fro_norm();
        trace.push(new_objective);
        let done = (new_objective - objective).abs() <= config.tol * objective.max(1.0);
        objective = new_objective;
        if done {
            converged = true;
            break;
        }
    }

    let zero_score_columns = zero_columns_of(&z);
    let fit = finish_fit(x, z, y, trace, iterations, converged, gamma_y, warnings)?;
    Ok(SmaFit {
        fit,
        gamma_z_used: gamma_z,
        zero_score_columns,
    })
}

/// Sparse coding: SCA on the transposed data matrix. In the returned fit,
/// `loadings` (n-by-k) holds the sparse scores of the original rows, and
/// the coding basis is `center · scores_basisᵀ` (k-by-p).
pub fn sparse_coding(x: &DataMatrix, config: &FitConfig) -> Result<ScaFit> {
    sca(&transpose(x), config)
}

/// (ZᵀZ)⁻¹ ZᵀXY (YᵀY)⁻¹, via pseudo-inverse when a Gram matrix is
/// singular. The unconstrained optimum of the center for fixed Z, Y.
pub fn optimal_center(x: &DataMatrix, z: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    let ztxy = center_of(x, z, y)?;
    let gz_inv = pseudo_inverse(&z.tr_matmul(z)?);
    let gy_inv = pseudo_inverse(&y.tr_matmul(y)?);
    gz_inv.matmul(&ztxy)?.matmul(&gy_inv)
}

/// Diagonal of ZᵀXY — the optimal diagonal center for orthonormal Z, Y.
/// The squared residual of the diagonal fit is ||X||_F² - sum d_i².
pub fn diagonal_center(x: &DataMatrix, z: &DenseMatrix, y: &DenseMatrix) -> Result<Vec<f64>> {
    if z.gram_deviation() > 1e-6 || y.gram_deviation() > 1e-6 {
        return Err(Error::InvalidParameter(
            "diagonal_center requires orthonormal Z and Y".into(),
        ));
    }
    let ztxy = center_of(x, z, y)?;
    Ok((0..ztxy.nrows()).map(|i| ztxy.get(i, i)).collect())
}

/// ||X·Y(YᵀY)⁻¹Yᵀ||_F² / ||X||_F², the cumulative proportion of variance
/// explained by the column space of Y.
pub fn pve(x: &DataMatrix, y: &DenseMatrix) -> Result<f64> {
    let x_norm_sq = x.fro_norm().powi(2);
    if x_norm_sq == 0.0 {
        return Err(Error::DegenerateInput("zero data matrix".into()));
    }
    let t = x.mul_dense(y)?; // n-by-k
    let gram = y.tr_matmul(y)?;
    let gram_inv = pseudo_inverse(&gram);
    let m = t.matmul(&gram_inv)?;
    // ||M Yᵀ||² = tr(M G Mᵀ), avoids the n-by-p product
    let mg = m.matmul(&gram)?;
    let projected: f64 = mg
        .data()
        .iter()
        .zip(m.data())
        .map(|(a, b)| a * b)
        .sum();
    Ok((projected / x_norm_sq).clamp(0.0, 1.0))
}

/// ||X y||₂², the explained variance of a single component. Zero loadings
/// get EV 0 (ranked last).
pub fn component_ev(x: &DataMatrix, y: &[f64]) -> Result<f64> {
    if y.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let xy = x.mul_vec(y)?;
    Ok(xy.iter().map(|v| v * v).sum())
}

/// ZᵀXY.
pub fn center_of(x: &DataMatrix, z: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    let xy = x.mul_dense(y)?;
    z.tr_matmul(&xy)
}

fn validate_input(x: &DataMatrix, k: usize) -> Result<()> {
    let (n, p) = (x.nrows(), x.ncols());
    if k == 0 || k > n.min(p) {
        return Err(Error::RankOutOfRange { k, rows: n, cols: p });
    }
    if x.fro_norm() == 0.0 {
        return Err(Error::DegenerateInput("zero data matrix".into()));
    }
    Ok(())
}

fn resolve_gamma(
    requested: Option<f64>,
    dim: usize,
    k: usize,
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let default = ((dim * k) as f64).sqrt();
    let gamma = requested.unwrap_or(default);
    if gamma < 1.0 {
        return Err(Error::InvalidParameter(format!("{name} = {gamma} must be >= 1")));
    }
    let lower = k as f64;
    let upper = k as f64 * (dim as f64).sqrt();
    if gamma < lower {
        warnings.push(format!(
            "{name} = {gamma} below {lower}: no orthonormal factor satisfies the budget"
        ));
    } else if gamma > upper {
        warnings.push(format!(
            "{name} = {gamma} above {upper}: the l1 constraint is inactive"
        ));
    }
    Ok(gamma)
}

// Polar factor via thin SVD without the full-rank check. A shrink step can
// zero out loading columns; the alternating update must still produce an
// orthonormal Z rather than abort mid-fit.
fn polar_lenient(x: &DenseMatrix) -> DenseMatrix {
    let svd = x.to_nalgebra().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let p: DMatrix<f64> = &u * &vt;
    DenseMatrix::from_nalgebra(&p)
}

fn pseudo_inverse(m: &DenseMatrix) -> DenseMatrix {
    let pinv = m
        .to_nalgebra()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .expect("svd computed");
    DenseMatrix::from_nalgebra(&pinv)
}

fn zero_columns_of(m: &DenseMatrix) -> Vec<usize> {
    (0..m.ncols())
        .filter(|&j| (0..m.nrows()).all(|i| m.get(i, j) == 0.0))
        .collect()
}

fn transpose(x: &DataMatrix) -> DataMatrix {
    match x {
        DataMatrix::Dense(m) => m.transpose().into(),
        DataMatrix::Sparse(m) => {
            let triplets = m.triplets().iter().map(|&(i, j, v)| (j, i, v)).collect();
            crate::matcore::SparseMatrix::new(m.ncols(), m.nrows(), triplets)
                .expect("valid by construction")
                .into()
        }
    }
}

/// Orders components by EV (ties: smaller first-nonzero row index first),
/// applies the sign convention, and assembles diagnostics.
#[allow(clippy::too_many_arguments)]
fn finish_fit(
    x: &DataMatrix,
    z: DenseMatrix,
    y: DenseMatrix,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    gamma_used: f64,
    warnings: Vec<String>,
) -> Result<ScaFit> {
    let k = y.ncols();
    let evs: Vec<f64> = (0..k)
        .map(|j| component_ev(x, &y.column(j)))
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        evs[b]
            .partial_cmp(&evs[a])
            .unwrap()
            .then_with(|| first_nonzero_row(&y, a).cmp(&first_nonzero_row(&y, b)))
    });

    let mut loadings = y.select_columns(&order);
    let scores_basis = z.select_columns(&order);
    let component_ev: Vec<f64> = order.iter().map(|&j| evs[j]).collect();

    for j in 0..k {
        let mut best = 0;
        let mut best_abs = 0.0f64;
        for i in 0..loadings.nrows() {
            let a = loadings.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 && loadings.get(best, j) < 0.0 {
            loadings.scale_column(j, -1.0);
        }
    }

    // computed from the reordered, sign-fixed factors, so B = ZᵀXY holds
    // for the stored loadings
    let center = center_of(x, &scores_basis, &loadings)?;
    let pve_value = pve(x, &loadings)?;
    let zero_columns = zero_columns_of(&loadings);

    Ok(ScaFit {
        loadings,
        scores_basis,
        center,
        component_ev,
        pve: pve_value,
        objective_trace: trace,
        iterations,
        converged,
        zero_columns,
        gamma_used,
        warnings,
    })
}

fn first_nonzero_row(m: &DenseMatrix, j: usize) -> usize {
    (0..m.nrows())
        .find(|&i| m.get(i, j) != 0.0)
        .unwrap_or(m.nrows())
}
