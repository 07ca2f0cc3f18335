use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mixing distribution: {0}")]
    InvalidDistribution(String),

    #[error("Beta({alpha}, {alpha}) is unsupported: alpha must be at least 0.5")]
    UnsupportedAlpha { alpha: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("dataset construction failed: {0}")]
    Construction(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error in {}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("x outside ε-inflated X_mix (no segment mass within ε = {epsilon})")]
    OutsideMix { epsilon: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("underdetermined system: {0}")]
    Underdetermined(String),

    #[error("inconsistent midpoints: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("rank deficiency: {0}")]
    Rank(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("degenerate objective: {0}")]
    Degenerate(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
