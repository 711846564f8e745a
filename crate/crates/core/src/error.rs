use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("kernel still has symbolic coefficients in {0:?}")]
    Symbolic(Vec<String>),

    #[error("no value supplied for free coefficient `{0}`")]
    MissingFreeValue(String),

    #[error("constraint system for {0} is overconstrained")]
    Overconstrained(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("unknown kernel name `{0}`")]
    UnknownKernel(String),

    #[error("objective is constant; nothing to optimize")]
    ConstantObjective,

    #[error("no start converged to a critical point: {0}")]
    NoCriticalPoint(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("gradient field has zero norm")]
    ZeroNorm,

    #[error("degenerate score range: {0}")]
    DegenerateRange(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid PGM: {0}")]
    Pgm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
