use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("graph too large for exact computation: n = {n}, limit = {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("infeasible pinning: {0}")]
    InfeasiblePinning(String),

    #[error("vertex {0} is pinned")]
    VertexPinned(usize),

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("sub-box is not contained in the region")]
    NotContained,

    #[error("no vertices at distance {0} from the root")]
    EmptySphere(usize),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
