//! Independent reference implementations ("oracles") used to check the
//! library: a one-sided Jacobi SVD, a sort-based exact l1-ball projection,
//! and small sampling helpers. Nothing here calls into the code under test
//! beyond the matrix container.

#![allow(dead_code)]

use epca::matcore::DenseMatrix;
use epca::simgen::sample_stiefel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Singular values of a dense matrix by one-sided Jacobi rotations,
/// nonincreasing. Entirely independent of the library's SVD path.
pub fn jacobi_singular_values(a: &DenseMatrix) -> Vec<f64> {
    // work on the tall orientation so columns outnumber nothing
    let tall = if a.nrows() >= a.ncols() {
        a.clone()
    } else {
        a.transpose()
    };
    let (n, p) = (tall.nrows(), tall.ncols());
    let mut b: Vec<Vec<f64>> = (0..p).map(|j| tall.column(j)).collect();

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for r in 0..n {
                    aii += b[i][r] * b[i][r];
                    ajj += b[j][r] * b[j][r];
                    aij += b[i][r] * b[j][r];
                }
                off = off.max(aij.abs() / (aii * ajj).sqrt().max(1e-300));
                if aij.abs() < 1e-15 * (aii * ajj).sqrt().max(1e-300) {
                    continue;
                }
                // Jacobi rotation zeroing the (i,j) entry of BᵀB
                let tau = (ajj - aii) / (2.0 * aij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let vi = b[i][r];
                    let vj = b[j][r];
                    b[i][r] = c * vi - s * vj;
                    b[j][r] = s * vi + c * vj;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }

    let mut sigma: Vec<f64> = b
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sigma.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sigma
}

/// Exact Euclidean projection onto the l1 ball of radius `gamma`, by the
/// standard sort-and-clip construction.
pub fn l1_project(data: &[f64], gamma: f64) -> Vec<f64> {
    let l1: f64 = data.iter().map(|v| v.abs()).sum();
    if l1 <= gamma {
        return data.to_vec();
    }
    let mut mags: Vec<f64> = data.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (m, &a) in mags.iter().enumerate() {
        prefix += a;
        let candidate = (prefix - gamma) / (m + 1) as f64;
        if m + 1 == mags.len() || candidate >= mags[m + 1] {
            theta = candidate;
            break;
        }
    }
    data.iter()
        .map(|v| v.signum() * (v.abs() - theta).max(0.0))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random matrix with orthonormal columns.
pub fn random_orthonormal(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    sample_stiefel(n, k, rng).expect("valid dimensions")
}

/// Orthonormal p-by-k matrix with disjoint column supports of size
/// `support`, entries random; the sparsest kind of orthonormal frame.
pub fn disjoint_support_orthonormal(
    p: usize,
    k: usize,
    support: usize,
    rng: &mut ChaCha8Rng,
) -> DenseMatrix {
    assert!(k * support <= p);
    let mut positions: Vec<usize> = (0..p).collect();
    for i in (1..positions.len()).rev() {
        let j = rng.gen_range(0..=i);
        positions.swap(i, j);
    }
    let mut m = DenseMatrix::zeros(p, k);
    for j in 0..k {
        let rows = &positions[j * support..(j + 1) * support];
        let vals: Vec<f64> = rows
            .iter()
            .map(|_| {
                let v: f64 = rng.gen_range(-1.0..1.0);
                if v.abs() < 0.2 {
                    v.signum() * 0.2
                } else {
                    v
                }
            })
            .collect();
        let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (r, v) in rows.iter().zip(vals) {
            m.set(*r, j, v / norm);
        }
    }
    m
}

/// Best |correlation| matching of columns of `a` to columns of `b` over
/// signed permutations; returns the per-column |correlation| under the
/// best permutation (greedy is insufficient, so this enumerates).
pub fn matched_abs_correlations(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let k = a.ncols();
    assert!(k <= 6, "exhaustive matching only for small k");
    let corr = |x: &[f64], y: &[f64]| -> f64 {
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 || ny == 0.0 {
            return 0.0;
        }
        let dot: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
        (dot / (nx * ny)).abs()
    };
    let table: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| corr(&a.column(i), &b.column(j))).collect())
        .collect();

    let mut best_min = -1.0;
    let mut best_perm: Vec<usize> = (0..k).collect();
    let mut perm: Vec<usize> = (0..k).collect();
    permute(&mut perm, 0, &mut |p| {
        let min = (0..k).map(|i| table[i][p[i]]).fold(f64::INFINITY, f64::min);
        if min > best_min {
            best_min = min;
            best_perm = p.to_vec();
        }
    });
    (0..k).map(|i| table[i][best_perm[i]]).collect()
}

fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}
