use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field has {expected} samples on this grid but {found} were given")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("expected a real-valued field, imaginary part reaches {ratio:.3e} of the peak")]
    NotReal { ratio: f64 },

    #[error("field contains NaN or infinite samples")]
    NonFinite,

    #[error("operation requires a nonzero field")]
    ZeroField,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl CoreError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
