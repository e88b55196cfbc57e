use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point does not match the space it is used with: {0}")]
    PointMismatch(String),

    #[error("cost evaluated to a non-finite value at anchor pair ({i}, {j})")]
    NonFiniteCost { i: usize, j: usize },

    #[error("transport instance is infeasible: {0}")]
    Infeasible(String),

    #[error("solver stopped after {iterations} iterations with gap {gap:.3e} > target {target:.3e}")]
    NotConverged {
        iterations: usize,
        gap: f64,
        target: f64,
    },

    #[error("barycentric projections need a normed target space (interval or box); use a geometric-median projection instead")]
    NotNormed,

    #[error("point lies outside every cell of the partition")]
    OutsidePartition,

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("unknown name in registry: {0}")]
    UnknownName(String),

    #[error("operation only supports {expected}, got {got}")]
    Unsupported { expected: String, got: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
