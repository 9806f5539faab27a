use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("frequency {0} Hz is outside the gas-model band [0.05, 1.1] THz")]
    OutOfBand(f64),

    #[error("tabulated attenuation does not cover {0} Hz")]
    TableCoverage(f64),

    #[error("expected {expected} path(s), scenario has {found}")]
    PathCount { expected: usize, found: usize },

    #[error("operation requires tx mode `{0}`")]
    TxMode(&'static str),

    #[error("no spectral peak above the noise floor")]
    NoPeak,

    #[error("lag {lag_s:e} s lies beyond the shaper range {max_s:e} s")]
    OutOfRange { lag_s: f64, max_s: f64 },

    #[error("model order {order} exceeds n_samples/3 = {limit}")]
    ModelOrderTooLarge { order: usize, limit: usize },

    #[error("found {found} resolvable harmonic(s), need at least 2")]
    HarmonicCountMismatch { found: usize },

    #[error("inconsistent harmonic lags: arccos argument {0} outside [-1, 1]")]
    InconsistentLags(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{failed} of {trials} Monte Carlo trials failed (last: {last})")]
    TooManyFailures {
        failed: usize,
        trials: usize,
        last: String,
    },
}

impl Error {
    /// True for errors caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Validation(_)
                | Error::PathCount { .. }
                | Error::TxMode(_)
                | Error::TableCoverage(_)
                | Error::OutOfBand(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
