use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("entry ({row}, {col}) = {value} is not divisible by {divisor}")]
    NotDivisible {
        row: usize,
        col: usize,
        value: u32,
        divisor: u32,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("deactivation count {requested} exceeds capacity {capacity}")]
    Capacity { requested: usize, capacity: usize },

    #[error(
        "acceptance rate {rate:.3e} below floor {floor:.1e} at {ebno_db} dB after {draws} draws"
    )]
    AcceptanceTooLow {
        ebno_db: f64,
        draws: u64,
        rate: f64,
        floor: f64,
    },

    #[error("stale tape: {0}")]
    StaleTape(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }
}
