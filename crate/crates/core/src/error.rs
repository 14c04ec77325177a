use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown point id {0}")]
    UnknownPoint(usize),
    #[error("points {0} and {1} are not connected (infinite distance)")]
    Disconnected(usize, usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("radius field is not admissible: {0}")]
    NotAdmissible(String),
    #[error("series diverges: root-test ratio {ratio} >= 1")]
    Divergent { ratio: f64 },
    #[error("parameter gate failed: {0}")]
    GateFailed(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("not a fixed point: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotFixedPoint { residual: f64, tolerance: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
