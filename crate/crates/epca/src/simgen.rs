//! Synthetic data generators and evaluation metrics: the low-rank
//! sparse-loading model, the stochastic block model, cluster assignment
//! from loadings, permutation-matched accuracy, and excess kurtosis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, SparseMatrix};
use crate::rngutil::standard_normal_vec;
use crate::shrink::soft_threshold;

/// X = S·Yᵀ + E with known truth factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowRankInstance {
    pub x: DenseMatrix,
    /// p-by-k sparse loadings used to build X.
    pub truth_loadings: DenseMatrix,
    /// n-by-k score matrix S.
    pub truth_scores: DenseMatrix,
    pub seed: u64,
}

/// Undirected stochastic-block-model graph with known block labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbmInstance {
    /// Symmetric 0/1 adjacency with zero diagonal.
    pub adjacency: SparseMatrix,
    /// Block id per node, in 1..=k.
    pub labels: Vec<usize>,
    pub connectivity: DenseMatrix,
    pub seed: u64,
}

/// The singular-value rule used throughout the desk-scale experiments:
/// sigma_l = 10 - sqrt(l), l = 1..k.
pub fn default_singular_values(k: usize) -> Vec<f64> {
    (1..=k).map(|l| 10.0 - (l as f64).sqrt()).collect()
}

/// Uniform (Haar) sample from the Stiefel manifold V(n, k): QR of an
/// i.i.d. Gaussian matrix with the R diagonal sign-fixed positive.
pub fn sample_stiefel(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<DenseMatrix> {
    if k == 0 || k > n {
        return Err(Error::InvalidDimensions(format!("Stiefel V({n},{k})")));
    }
    let g = DenseMatrix::new(n, k, standard_normal_vec(rng, n * k))?;
    let qr = g.to_nalgebra().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(DenseMatrix::from_fn(n, k, |i, j| q[(i, j)]))
}

/// Samples the low-rank model: S = U·diag(sigma)·Vᵀ with Haar U and V,
/// loadings from a Haar Stiefel sample soft-thresholded at `truth_gamma`,
/// and i.i.d. N(0, noise_sd²) noise.
pub fn gen_lowrank(
    n: usize,
    p: usize,
    k: usize,
    singular_values: &[f64],
    truth_gamma: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<LowRankInstance> {
    if k == 0 || k > n.min(p) {
        return Err(Error::InvalidDimensions(format!("k = {k} for {n}x{p}")));
    }
    if singular_values.len() != k {
        return Err(Error::InvalidParameter(format!(
            "{} singular values for k = {k}",
            singular_values.len()
        )));
    }
    if noise_sd < 0.0 {
        return Err(Error::InvalidParameter("negative noise sd".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let u = sample_stiefel(n, k, &mut rng)?;
    let v = sample_stiefel(k, k, &mut rng)?;
    let mut scaled = u.clone();
    for (j, &s) in singular_values.iter().enumerate() {
        scaled.scale_column(j, s);
    }
    let truth_scores = scaled.matmul(&v.transpose())?;

    let stiefel_loadings = sample_stiefel(p, k, &mut rng)?;
    let truth_loadings = soft_threshold(&stiefel_loadings, truth_gamma, 1e-10)?.matrix;

    let noise = standard_normal_vec(&mut rng, n * p);
    let signal = truth_scores.matmul(&truth_loadings.transpose())?;
    let x = DenseMatrix::from_fn(n, p, |i, j| signal.get(i, j) + noise_sd * noise[i * p + j]);

    Ok(LowRankInstance {
        x,
        truth_loadings,
        truth_scores,
        seed,
    })
}

/// Samples an SBM adjacency: upper-triangle edges are Bernoulli with the
/// probability given by the endpoints' blocks, mirrored below, zero
/// diagonal.
pub fn gen_sbm(
    n: usize,
    block_sizes: &[usize],
    connectivity: &DenseMatrix,
    seed: u64,
) -> Result<SbmInstance> {
    let k = block_sizes.len();
    if k == 0 || block_sizes.iter().sum::<usize>() != n {
        return Err(Error::InvalidParameter(format!(
            "block sizes must sum to n = {n}"
        )));
    }
    if connectivity.nrows() != k || connectivity.ncols() != k {
        return Err(Error::ShapeMismatch(format!(
            "connectivity must be {k}x{k}"
        )));
    }
    for i in 0..k {
        for j in 0..k {
            let p = connectivity.get(i, j);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "connectivity[{i}][{j}] = {p} outside [0, 1]"
                )));
            }
            if (connectivity.get(i, j) - connectivity.get(j, i)).abs() > 0.0 {
                return Err(Error::InvalidParameter("connectivity must be symmetric".into()));
            }
        }
    }

    let mut labels = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(b + 1).take(size));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = connectivity.get(labels[i] - 1, labels[j] - 1);
            if rng.gen::<f64>() < p {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
    }
    let adjacency = SparseMatrix::new(n, n, triplets)?;
    Ok(SbmInstance {
        adjacency,
        labels,
        connectivity: connectivity.clone(),
        seed,
    })
}

/// Assigns node i to the cluster whose loading has the largest absolute
/// value in row i. Ties and all-zero rows are resolved uniformly at random
/// from the seeded generator. Labels are 1-based.
pub fn assign_clusters(y: &DenseMatrix, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = y.ncols();
    let mut labels = Vec::with_capacity(y.nrows());
    for i in 0..y.nrows() {
        let row = y.row(i);
        let max_abs = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let candidates: Vec<usize> = if max_abs == 0.0 {
            (0..k).collect()
        } else {
            (0..k).filter(|&j| row[j].abs() == max_abs).collect()
        };
        let choice = if candidates.len() == 1 {
            candidates[0]
        } else {
            candidates[rng.gen_range(0..candidates.len())]
        };
        labels.push(choice + 1);
    }
    labels
}

/// Best label agreement over all permutations of 1..=k: exhaustive
/// enumeration for k <= 8, assignment matching by bitmask DP above.
pub fn accuracy(c: &[usize], c_star: &[usize], k: usize) -> Result<f64> {
    if c.len() != c_star.len() {
        return Err(Error::ShapeMismatch(format!(
            "label lengths {} vs {}",
            c.len(),
            c_star.len()
        )));
    }
    if c.is_empty() || k == 0 {
        return Err(Error::InvalidParameter("empty labels".into()));
    }
    for &v in c.iter().chain(c_star) {
        if v == 0 || v > k {
            return Err(Error::InvalidParameter(format!(
                "label {v} outside 1..={k}"
            )));
        }
    }

    // counts[a][b] = #{i : c_i = a+1, c*_i = b+1}
    let mut counts = vec![vec![0usize; k]; k];
    for (&a, &b) in c.iter().zip(c_star) {
        counts[a - 1][b - 1] += 1;
    }

    let best = if k <= 8 {
        max_agreement_exhaustive(&counts, k)
    } else {
        max_agreement_dp(&counts, k)
    };
    Ok(best as f64 / c.len() as f64)
}

fn max_agreement_exhaustive(counts: &[Vec<usize>], k: usize) -> usize {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |perm| {
        let total: usize = (0..k).map(|a| counts[a][perm[a]]).sum();
        if total > best {
            best = total;
        }
    });
    best
}

fn permute(perm: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == perm.len() {
        visit(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        permute(perm, start + 1, visit);
        perm.swap(start, i);
    }
}

// Assignment DP over subsets of target labels: O(2^k * k).
fn max_agreement_dp(counts: &[Vec<usize>], k: usize) -> usize {
    let full = 1usize << k;
    let mut dp = vec![0usize; full];
    for mask in 0..full - 1 {
        let a = (mask as u32).count_ones() as usize; // next source label to place
        for b in 0..k {
            if mask & (1 << b) == 0 {
                let next = mask | (1 << b);
                dp[next] = dp[next].max(dp[mask] + counts[a][b]);
            }
        }
    }
    dp[full - 1]
}

/// Sample excess kurtosis: n·sum((x-mean)⁴) / (sum((x-mean)²))² − 3.
pub fn excess_kurtosis(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if m2 == 0.0 {
        return Err(Error::DegenerateInput("constant vector".into()));
    }
    let m4: f64 = x.iter().map(|v| (v - mean).powi(4)).sum();
    Ok(n * m4 / (m2 * m2) - 3.0)
}
