use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("composition {value} is outside the open interval (0, 1)")]
    CompositionOutOfRange { value: f64 },

    #[error("invalid composition vector: {0}")]
    InvalidComposition(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("model kind `{0}` has no trainable parameters")]
    NotTrainable(&'static str),

    #[error("mass-balance multiplier not bracketed within |alpha| <= {limit:e} (feed {feed})")]
    RootNotBracketed { feed: f64, limit: f64 },

    #[error("Newton iteration failed after {iterations} iterations, residual {residual:e}")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error(
        "group enumeration of order {order} needs {count} candidate tuples, budget is {budget}"
    )]
    BudgetExceeded {
        order: usize,
        count: u128,
        budget: u128,
    },

    #[error("training diverged at epoch {epoch}: loss {loss:e}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("batch item {index} failed: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by a failed
    /// computation. The CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidGrid(_)
            | Error::CompositionOutOfRange { .. }
            | Error::InvalidComposition(_)
            | Error::InvalidParameter { .. }
            | Error::EmptyInput(_)
            | Error::LengthMismatch { .. }
            | Error::NotTrainable(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::BatchItem { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
