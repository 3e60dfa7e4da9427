use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point set contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("node {0} is isolated (zero degree) after sparsification; increase k_nn")]
    IsolatedNode(usize),

    #[error("node {0} has zero degree; the normalized and random-walk Laplacians are undefined")]
    ZeroDegree(usize),

    #[error("cluster {0} is empty; ratio and normalized cuts divide by its size")]
    EmptyCluster(usize),

    #[error("eigensolver did not converge after {restarts} restarts (best residual {best_residual:.3e})")]
    NotConverged { restarts: usize, best_residual: f64 },

    #[error("lambda_star = {lambda_star} lies outside (0, {lambda_max})")]
    CutoffOutOfRange { lambda_star: f64, lambda_max: f64 },

    #[error("eigencount dichotomy exhausted its budget of {steps} steps; the spectral gap is too small, use the exact embedding")]
    DichotomyBudget { steps: usize },

    #[error("matrix is numerically rank deficient: rank {rank} < required {required}; take more samples")]
    RankDeficient { rank: usize, required: usize },

    #[error("expected a combinatorial Laplacian")]
    NotCombinatorial,

    #[error("invalid method configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
