//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by estimation, simulation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dataset contains no exactly recalled event ages, so a support
    /// for the nonparametric estimator cannot be built.
    #[error("no exactly recalled event ages in the data")]
    NoExactRecalls,

    /// The optimizer exhausted its iteration budget without meeting the
    /// gradient tolerance.
    #[error("optimizer did not converge after {iterations} iterations (gradient max-norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    /// The dataset has no usable subjects for the requested likelihood.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The observed information matrix could not be inverted reliably.
    #[error("singular information matrix (condition number {0:.3e})")]
    SingularInformation(f64),

    /// A subject's mixing weights vanished during a self-consistency step.
    #[error("subject {subject} has zero total weight under a strictly positive mass vector")]
    AllZeroRow { subject: usize },

    /// The instance is too large for exhaustive enumeration.
    #[error("instance too large for the brute-force solver: {0}")]
    TooLarge(String),

    /// An operation requiring a converged fit received an unconverged one.
    #[error("fit has not converged")]
    FitNotConverged,

    /// Goodness-of-fit degrees of freedom are not positive.
    #[error("non-positive degrees of freedom: {bins} bins with {params} fitted parameters")]
    NonPositiveDf { bins: usize, params: usize },

    /// The requested operation does not support this likelihood kind.
    #[error("unsupported likelihood kind: {0}")]
    UnsupportedKind(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed dataset contents (bad field, missing column, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
