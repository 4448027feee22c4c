use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),

    #[error("quantile level {0} is outside the open interval (0, 1)")]
    LevelOutOfRange(f64),

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("transition matrix is reducible")]
    Reducible,

    #[error("transition matrix is periodic (period {0})")]
    Periodic(usize),

    #[error("value {value} at row {step}, column {coord} is not a support point of its marginal")]
    NotSupported {
        step: usize,
        coord: usize,
        value: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid cylinder: {0}")]
    InvalidCylinder(String),

    #[error("size cap exceeded: {what} = {size} > {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("insufficient samples: {found} windows, at least {required} required")]
    InsufficientSamples { found: usize, required: usize },

    #[error("covariance series does not decay (ratio estimate {0})")]
    NoDecay(f64),

    #[error("matrix is indefinite: eigenvalue {0} below tolerance")]
    Indefinite(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
