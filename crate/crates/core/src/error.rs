use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("{what} is not symmetric positive definite")]
    NotSpd { what: String },

    #[error("operator is not self-adjoint (residual {residual:e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("fractional power {power} undefined: {reason}")]
    FractionalPower { power: f64, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-deficient basis: {0}")]
    RankDeficient(String),

    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error("internal consistency check failed: {what} residual {residual:e} exceeds {limit:e}")]
    Consistency {
        what: &'static str,
        residual: f64,
        limit: f64,
    },

    #[error("eigenvalue {value:e} of {what} is negative")]
    NegativeEigenvalue { what: &'static str, value: f64 },

    #[error("mode {index}: kappa {kappa:e} vanishes")]
    RankCollapse { index: usize, kappa: f64 },

    #[error("truncation {requested} outside 1..={available}")]
    Truncation { requested: usize, available: usize },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
