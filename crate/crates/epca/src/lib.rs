//! Sparse principal component analysis by orthogonal rotation.
//!
//! The central object is a rank-k decomposition X ~ Z·B·Yᵀ where Z and Y
//! are near-orthogonal with an l1 budget controlling their sparsity.
//! Fitting alternates a Polar-Rotate-Shrink step (polar projection,
//! varimax or absmin rotation, soft-thresholding) on one or both factors:
//! SCA sparsifies the loadings Y only, SMA sparsifies both Z and Y, and
//! sparse coding runs SCA on the transposed matrix so the scores come out
//! sparse instead.
//!
//! Supporting modules: [`matcore`] (dense/sparse matrices, truncated SVD,
//! CSV and Matrix Market I/O), [`rotate`] (varimax and absmin orthogonal
//! rotation), [`shrink`] (l1 soft-thresholding), [`tune`] (element-wise
//! K-fold cross-validation over a (k, gamma) grid), and [`simgen`]
//! (low-rank and stochastic-block-model test-bed generators plus cluster
//! and kurtosis metrics).

pub mod decomp;
pub mod error;
pub mod matcore;
pub mod rotate;
pub mod shrink;
pub mod simgen;
pub mod tune;

mod rngutil;

pub use decomp::{
    component_ev, diagonal_center, optimal_center, pve, sca, sma, sparse_coding, FitConfig,
    ScaFit, SmaFit,
};
pub use error::{Error, Result};
pub use matcore::{DataMatrix, DenseMatrix, SparseMatrix};
pub use rotate::RotationKind;
pub use tune::{cross_validate, make_folds, CvMode, CvResult};
