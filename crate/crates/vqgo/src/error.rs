use thiserror::Error;

/// Errors produced anywhere in the simulator or optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("degenerate effective-rate fit: residual {residual:.4} exceeds {threshold:.4}")]
    DegenerateFit { residual: f64, threshold: f64 },

    #[error("leakage {leakage:.4} exceeds threshold {threshold:.4}")]
    Leakage { leakage: f64, threshold: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("gaussian process conditioning failure: {0}")]
    Conditioning(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArg(_) => "invalid-arg",
            Error::DimMismatch(_) => "dim-mismatch",
            Error::Linalg(_) => "linalg",
            Error::DegenerateFit { .. } => "degenerate-fit",
            Error::Leakage { .. } => "leakage",
            Error::Calibration(_) => "calibration",
            Error::Conditioning(_) => "conditioning",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
        }
    }

    /// Process exit code for the CLI; 0 is reserved for success.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArg(_) | Error::Config(_) => 2,
            Error::Calibration(_) => 3,
            Error::DegenerateFit { .. } => 4,
            Error::Leakage { .. } => 5,
            Error::Conditioning(_) => 6,
            Error::Io(_) | Error::Serde(_) => 7,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
