use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty point set")]
    EmptySet,

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid ellipsoid: {0}")]
    InvalidEllipsoid(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("infeasible coverage: {0}")]
    Infeasible(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("too few inliers: delta * n = {0} < 2")]
    TooFewInliers(f64),

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("no qualifying set in greedy round {round}")]
    NoQualifyingSet { round: usize },

    #[error("greedy round cap of {cap} exceeded")]
    RoundCapExceeded { cap: usize },

    #[error("graph generation failed: {0}")]
    GraphGeneration(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
