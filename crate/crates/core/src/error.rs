use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("manifold mismatch: `{left}` vs `{right}`")]
    ManifoldMismatch { left: String, right: String },

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
