use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the set of values an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration cannot be realized (bad frame length, degenerate band, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// Two inputs that must agree in shape or provenance do not.
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Consistency(_) => "consistency",
            Error::Format(_) => "format",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
