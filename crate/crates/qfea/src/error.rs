//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants are
//! grouped by what went wrong rather than where: callers that care about a
//! specific failure (e.g. an unsupported WAV encoding vs. a truncated file)
//! can match on the variant; everything renders to a one-line message.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure (file missing, permission denied, short read).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Structurally invalid file: bad magic, malformed chunk layout,
    /// impossible header fields.
    #[error("format error: {0}")]
    Format(String),

    /// Well-formed file in an encoding this toolkit does not handle
    /// (e.g. stereo or float WAV).
    #[error("unsupported format: {0}")]
    Unsupported(String),

    /// Text input that does not parse; carries the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The same trial identifier appeared more than once.
    #[error("duplicate trial id: {0}")]
    Duplicate(String),

    /// A configuration value is out of range or internally inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// An argument is outside the mathematical domain of the operation
    /// (negative value into log1p, echo lag past the signal, empty input).
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke an inter-argument contract (mismatched trial sets,
    /// inconsistent feature dimensions).
    #[error("contract error: {0}")]
    Contract(String),

    /// A binary payload is shorter than its header promises, or otherwise
    /// inconsistent with it.
    #[error("corrupt file: {0}")]
    Corrupt(String),

    /// A score set is unusable for the requested statistic
    /// (zero variance reference, class with no trials).
    #[error("degenerate scores: {0}")]
    DegenerateScores(String),

    /// The requested metric is undefined under the given cost model.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

impl Error {
    /// Shorthand for [`Error::Parse`].
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
