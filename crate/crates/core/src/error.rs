use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the link simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sequence length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("root {root} is not coprime with length {len} (gcd = {gcd})")]
    NotCoprime { root: i64, len: usize, gcd: u64 },

    #[error("carrier {carrier_hz} Hz is not below Nyquist ({nyquist_hz} Hz)")]
    AboveNyquist { carrier_hz: f64, nyquist_hz: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty search window")]
    EmptySearchWindow,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
