//! Crate-wide error type.
//!
//! Errors are grouped by what the caller can do about them: `Parse`,
//! `Validation` and `Range` point at bad input data (with enough context to
//! fix the offending line or field), while `Argument`, `Config`, `Protocol`
//! and `SplitIntegrity` indicate misuse of the API or a broken evaluation
//! setup. Statistical degeneracies get their own variants so callers can
//! surface them per-measure instead of aborting a whole report.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input text that cannot be decoded at all (wrong field count,
    /// unparseable number, bad key). Carries the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A decoded value that violates a documented invariant.
    #[error("invalid value for '{field}': {message}")]
    Validation { field: String, message: String },

    /// An index outside the extent declared by the session manifest.
    #[error("out of range: {0}")]
    Range(String),

    /// Caller passed arguments that violate an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Missing or inconsistent run configuration (e.g. a neural method
    /// selected without a trained model).
    #[error("configuration error: {0}")]
    Config(String),

    /// Methods under comparison were not evaluated on the same frames.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A cross-validation split whose training side leaks held-out data.
    #[error("split integrity error: {0}")]
    SplitIntegrity(String),

    /// A paired sample with no nonzero differences.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Correlation requested on a constant input vector.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad input data or configuration, as opposed
    /// to runtime failures. The CLI maps these to exit code 2.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Numeric(_))
    }
}
