use thiserror::Error;

/// Errors raised by the sensing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("noise matrix kernel has dimension {0}, expected exactly one")]
    KernelDimension(usize),

    #[error("no decoherence-free subspace exists for these sensor positions")]
    NoDfs,

    #[error("signal has zero spectral range inside every candidate subspace")]
    NoSensitivity,

    #[error("singular statistical model: outcome {outcome} has zero probability but nonzero derivative")]
    SingularModel { outcome: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("phase window selects no analysis phases for signal {signal}")]
    EmptyWindow { signal: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Configuration problems are reported separately from runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
