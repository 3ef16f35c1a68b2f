use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("parse error in {path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("resonant mode {mode:?}: |m . dH0/dJ| = {divisor:e}")]
    Resonance { mode: Vec<i32>, divisor: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("state is mixed (purity {purity}); use the Wootters concurrence instead")]
    Purity { purity: f64 },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("eigensolver did not converge for matrix:\n{0}")]
    Eigen(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("invalid generator series: {0}")]
    InvalidSeries(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::MissingColumn(_)
            | Error::UnsupportedDimension(_) => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
