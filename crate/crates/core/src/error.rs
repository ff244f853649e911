use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A computed quantity (not an input) overflowed.
    #[error("{0} overflowed to a non-finite value")]
    Overflow(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Cholesky factorization failed after jitter escalation (last jitter tried: {jitter:e})")]
    Cholesky { jitter: f64 },

    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,

    #[error(
        "non-uniform sampling (max/min gap deviation {ratio:e}); spectral initialization needs a regular grid, use random initialization"
    )]
    NonUniformSampling { ratio: f64 },

    #[error("spectrum has no positive power")]
    EmptySpectrum,

    #[error("target values have zero variance")]
    ZeroVariance,

    #[error("cannot split {n} points into {m} subsets")]
    Partition { n: usize, m: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
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

/// Coarse failure category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Context { source, .. } => source.class(),
            Error::InvalidParameter(_) | Error::Partition { .. } => ErrorClass::Usage,
            Error::Cholesky { .. } | Error::NonFiniteObjective | Error::Overflow(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, context: &str) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: &str) -> Result<T> {
        self.map_err(|e| e.context(context))
    }
}
