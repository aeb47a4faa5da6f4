use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Empty or otherwise unusable input signal.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("synchronisation failed: {0}")]
    SynchronisationFailed(String),

    /// The regressor is constant, so gain and offset are not separable.
    #[error("rank-deficient regression: reference signal is constant")]
    RankDeficient,

    #[error("invalid reference spectrum: bin {bin} has magnitude {magnitude:e}")]
    InvalidReference { bin: usize, magnitude: f64 },

    #[error("outlier rejection left {inliers} of {periods} periods (need at least 2)")]
    TooFewInliers { inliers: usize, periods: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("truncated IQ file {path:?}: {bytes} bytes is not a whole number of samples")]
    Truncated { path: PathBuf, bytes: u64 },

    #[error("{path:?} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
