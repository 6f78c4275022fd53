use thiserror::Error;

/// Errors produced by matrix construction, factorization, and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("index ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate coordinate ({0}, {1}) in sparse triplets")]
    DuplicateCoordinate(usize, usize),
    #[error("explicit zero stored at ({0}, {1}) in sparse triplets")]
    ExplicitZero(usize, usize),
    #[error("rank {k} out of range for {rows}x{cols} matrix")]
    RankOutOfRange { k: usize, rows: usize, cols: usize },
    #[error("rank-deficient input: sigma_min/sigma_max = {ratio:e}")]
    RankDeficient { ratio: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("convergence failure: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
