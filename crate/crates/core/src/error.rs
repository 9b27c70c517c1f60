use thiserror::Error;

/// Errors raised across the recovery pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain-model error: {0}")]
    DomainModel(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("oracle failed at point {point:?}: {reason}")]
    Oracle { point: Vec<f64>, reason: String },

    #[error("no fooling function possible at level {kappa:?}: every cell holds a sample point")]
    NoFooling { kappa: Vec<u32> },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
