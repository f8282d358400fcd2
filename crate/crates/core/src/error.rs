use thiserror::Error;

/// Errors produced by model construction, state validation and integration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("unknown bath label `{0}`")]
    UnknownBath(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid energy basis: {0}")]
    InvalidBasis(String),

    #[error("channel {channel} of bath `{bath}` has no adjoint partner at the opposite frequency")]
    MissingPartner { bath: String, channel: usize },

    #[error("integration unstable at t = {time}: {detail}")]
    Stability { time: f64, detail: String },

    #[error("no convergence by t = {max_time} (residual {residual:e})")]
    NotConverged { max_time: f64, residual: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
