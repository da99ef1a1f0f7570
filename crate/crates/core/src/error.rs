use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("signal truncated by grid edge: {0}")]
    Truncation(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("Wigner correlation window wraps: {0}")]
    Wraparound(String),

    #[error("efficiency undefined for a zero-norm input")]
    ZeroNorm,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Short machine-readable code, used in result tables and CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Truncation(_) => "truncation",
            Error::Resolution(_) => "resolution",
            Error::Wraparound(_) => "wraparound",
            Error::ZeroNorm => "zero_norm",
            Error::Numerical(_) => "numerical",
            Error::Calibration(_) => "calibration",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
