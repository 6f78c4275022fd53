//! Data-driven selection of k and gamma by element-wise K-fold
//! cross-validation: entries are randomly partitioned, each fold's held-out
//! entries are zeroed before fitting, and candidates are scored by squared
//! error over the held-out entries.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{sca, sma, FitConfig};
use crate::error::{Error, Result};
use crate::matcore::{DataMatrix, DenseMatrix, SparseMatrix};

/// Disjoint entry masks jointly covering all (row, col) pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k_folds: usize,
    pub masks: Vec<Vec<(usize, usize)>>,
    pub seed: u64,
}

/// Which fitting engine cross-validation drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvMode {
    Sca,
    Sma,
}

/// Per-candidate, per-fold held-out squared errors. A `None` entry marks a
/// fit failure; such candidates are excluded from selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<FitConfig>,
    pub mse: Vec<Vec<Option<f64>>>,
    pub mean_mse: Vec<Option<f64>>,
    /// Index into `grid` of the selected candidate, ties broken toward
    /// smaller gamma then smaller k.
    pub selected: Option<usize>,
    pub warnings: Vec<String>,
}

/// Uniform random partition of the n·p entry indices into K near-equal
/// masks (sizes within one of total/K).
pub fn make_folds(n: usize, p: usize, k_folds: usize, seed: u64) -> Result<FoldPlan> {
    if k_folds < 2 || k_folds > n * p {
        return Err(Error::InvalidParameter(format!(
            "K = {k_folds} outside [2, {}]",
            n * p
        )));
    }
    let mut entries: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entries.shuffle(&mut rng);

    let total = entries.len();
    let base = total / k_folds;
    let extra = total % k_folds;
    let mut masks = Vec::with_capacity(k_folds);
    let mut cursor = 0;
    for f in 0..k_folds {
        let size = base + usize::from(f < extra);
        masks.push(entries[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(FoldPlan {
        k_folds,
        masks,
        seed,
    })
}

/// Runs K-fold element-wise CV over the candidate grid and reports
/// per-fold and mean held-out squared error plus the argmin candidate.
///
/// Fold-candidate fits are independent; they run in parallel and results
/// are assembled by index, so the output does not depend on scheduling.
pub fn cross_validate(
    x: &DataMatrix,
    grid: &[FitConfig],
    k_folds: usize,
    seed: u64,
    mode: CvMode,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty candidate grid".into()));
    }
    let (n, p) = (x.nrows(), x.ncols());
    let plan = make_folds(n, p, k_folds, seed)?;

    let masked: Vec<DataMatrix> = plan.masks.iter().map(|m| mask_entries(x, m)).collect();
    let x_dense_lookup = EntryLookup::new(x);

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..k_folds).map(move |f| (c, f)))
        .collect();
    let outcomes: Vec<((usize, usize), std::result::Result<f64, String>)> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let score = fold_mse(&masked[f], &plan.masks[f], &x_dense_lookup, &grid[c], mode);
            ((c, f), score.map_err(|e| e.to_string()))
        })
        .collect();

    let mut mse = vec![vec![None; k_folds]; grid.len()];
    let mut warnings = Vec::new();
    for ((c, f), outcome) in outcomes {
        match outcome {
            Ok(v) => mse[c][f] = Some(v),
            Err(e) => warnings.push(format!("candidate {c} fold {f} failed: {e}")),
        }
    }

    let mean_mse: Vec<Option<f64>> = mse
        .iter()
        .map(|folds| {
            if folds.iter().all(|v| v.is_some()) {
                Some(folds.iter().map(|v| v.unwrap()).sum::<f64>() / k_folds as f64)
            } else {
                None
            }
        })
        .collect();

    let selected = select_candidate(grid, &mean_mse);
    Ok(CvResult {
        grid: grid.to_vec(),
        mse,
        mean_mse,
        selected,
        warnings,
    })
}

fn select_candidate(grid: &[FitConfig], mean_mse: &[Option<f64>]) -> Option<usize> {
    let min = mean_mse
        .iter()
        .filter_map(|v| *v)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let tie_tol = 1e-9 * min.abs().max(1e-300);
    let mut best: Option<usize> = None;
    for (i, v) in mean_mse.iter().enumerate() {
        let Some(v) = v else { continue };
        if *v > min + tie_tol {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (gb, kb) = candidate_key(&grid[b]);
                let (gi, ki) = candidate_key(&grid[i]);
                (gi, ki) < (gb, kb)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

// tie-break key: (gamma resolved against its default, k)
fn candidate_key(config: &FitConfig) -> (ordered::F64, usize) {
    let gamma = config.gamma.unwrap_or(f64::INFINITY);
    (ordered::F64(gamma), config.k)
}

mod ordered {
    #[derive(PartialEq, PartialOrd)]
    pub struct F64(pub f64);
    impl Eq for F64 {}
    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Ord for F64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.partial_cmp(other).unwrap()
        }
    }
}

fn fold_mse(
    masked: &DataMatrix,
    mask: &[(usize, usize)],
    original: &EntryLookup,
    config: &FitConfig,
    mode: CvMode,
) -> Result<f64> {
    // reconstruction restricted to the held-out entries:
    //   SCA: Xhat = X_masked · Y · Yᵀ  ->  Xhat_ij = T_i · Y_j,  T = X_masked·Y
    //   SMA: Xhat = Z · B · Yᵀ        ->  Xhat_ij = (ZB)_i · Y_j
    let (t, y) = match mode {
        CvMode::Sca => {
            let fit = sca(masked, config)?;
            (masked.mul_dense(&fit.loadings)?, fit.loadings)
        }
        CvMode::Sma => {
            let sma_fit = sma(masked, config)?;
            let zb = sma_fit.fit.scores_basis.matmul(&sma_fit.fit.center)?;
            (zb, sma_fit.fit.loadings)
        }
    };
    let mut total = 0.0;
    for &(i, j) in mask {
        let mut xhat = 0.0;
        for l in 0..y.ncols() {
            xhat += t.get(i, l) * y.get(j, l);
        }
        let diff = xhat - original.get(i, j);
        total += diff * diff;
    }
    Ok(total)
}

fn mask_entries(x: &DataMatrix, mask: &[(usize, usize)]) -> DataMatrix {
    match x {
        DataMatrix::Dense(m) => {
            let mut out = m.clone();
            for &(i, j) in mask {
                out.set(i, j, 0.0);
            }
            out.into()
        }
        DataMatrix::Sparse(m) => {
            let drop: std::collections::HashSet<(usize, usize)> = mask.iter().copied().collect();
            let triplets = m
                .triplets()
                .iter()
                .filter(|&&(i, j, _)| !drop.contains(&(i, j)))
                .copied()
                .collect();
            SparseMatrix::new(m.nrows(), m.ncols(), triplets)
                .expect("filtered triplets stay valid")
                .into()
        }
    }
}

// Read-only random access into the original matrix without densifying.
struct EntryLookup {
    dense: Option<DenseMatrix>,
    sparse: Option<SparseMatrix>,
}

impl EntryLookup {
    fn new(x: &DataMatrix) -> Self {
        match x {
            DataMatrix::Dense(m) => Self {
                dense: Some(m.clone()),
                sparse: None,
            },
            DataMatrix::Sparse(m) => Self {
                dense: None,
                sparse: Some(m.clone()),
            },
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        match (&self.dense, &self.sparse) {
            (Some(m), _) => m.get(i, j),
            (_, Some(m)) => m.get(i, j),
            _ => unreachable!(),
        }
    }
}
