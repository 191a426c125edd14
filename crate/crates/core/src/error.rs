use std::path::PathBuf;

use thiserror::Error;

use crate::garch::GarchParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller passed an invalid argument or configuration.
    Usage,
    /// The data itself is unusable: unreadable, malformed, too short.
    Data,
    /// A numerical procedure failed on otherwise valid data.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("no-arbitrage violation: {0}")]
    NoArbitrage(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("GARCH fit did not converge after {iterations} iterations (best log-likelihood {loglik})")]
    GarchNotConverged {
        best: Box<GarchParams>,
        loglik: f64,
        iterations: usize,
    },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("missing dates: {0}")]
    MissingDates(String),

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

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::InsufficientData(_)
            | Error::NoArbitrage(_)
            | Error::Parse { .. }
            | Error::MissingDates(_)
            | Error::Io { .. }
            | Error::Csv { .. } => ErrorClass::Data,
            Error::Degenerate(_)
            | Error::RankDeficient(_)
            | Error::NotConverged { .. }
            | Error::GarchNotConverged { .. } => ErrorClass::Numerical,
        }
    }
}
