use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("both unrolling multisets are empty")]
    EmptyForests,
    #[error("brute-force guard exceeded: {size} > {limit}")]
    GuardExceeded { size: usize, limit: usize },
    #[error("malformed distance matrix: {0}")]
    MalformedMatrix(String),
    #[error("pooling {pooling} incompatible with target: {reason}")]
    PoolingMismatch { pooling: String, reason: String },
    #[error("dataset format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
