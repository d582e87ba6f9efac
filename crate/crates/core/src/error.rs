use thiserror::Error;

/// Errors raised by the matching pipeline.
///
/// Each variant maps onto one process exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("spectral deficiency: {0}")]
    SpectralDeficiency(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 2 = configuration, 3 = numerical, 4 = spectral deficiency.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Schedule(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Numerical(_) | Error::Internal(_) => 3,
            Error::SpectralDeficiency(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Schedule(_) => "schedule",
            Error::Numerical(_) => "numerical",
            Error::SpectralDeficiency(_) => "spectral-deficiency",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
