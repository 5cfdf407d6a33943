use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} is {left_shape}, {right} is {right_shape}")]
    Shape {
        op: &'static str,
        left: String,
        left_shape: String,
        right: String,
        right_shape: String,
    },

    #[error("non-finite value encountered in {context}{}", at_step.map(|t| format!(" at time step {t}")).unwrap_or_default())]
    NonFinite {
        context: String,
        at_step: Option<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("riccati iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    RiccatiDiverged { iterations: usize, residual: f64 },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("csv parse error at row {row}: {message}")]
    CsvRow { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(
        op: &'static str,
        left: impl Into<String>,
        left_shape: impl Into<String>,
        right: impl Into<String>,
        right_shape: impl Into<String>,
    ) -> Self {
        Error::Shape {
            op,
            left: left.into(),
            left_shape: left_shape.into(),
            right: right.into(),
            right_shape: right_shape.into(),
        }
    }
}
