use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency {xi:?} is not covered by the truncated lattice (interior radius {interior})")]
    Uncovered { xi: Vec<f64>, interior: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("balls B_{first:?} and B_{second:?} intersect")]
    Overlap { first: Vec<i64>, second: Vec<i64> },

    #[error("derivative of order {requested} requested but only {available} available")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("cover alpha {cover} does not match norm alpha {params}")]
    AlphaMismatch { cover: f64, params: f64 },

    #[error("band {0:?} carries no mass")]
    EmptyBand(Vec<i64>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
