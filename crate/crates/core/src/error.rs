use thiserror::Error;

/// Errors raised by the analytical and simulation pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    /// A model or configuration field failed validation. `field` is the
    /// dotted path of the offending field, e.g. `users.kind.sigma`.
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },

    /// Numerical integration did not reach the requested tolerance.
    #[error("{context}: quadrature did not converge (estimate {estimate:e}, error {error_estimate:e})")]
    Convergence {
        context: String,
        estimate: f64,
        error_estimate: f64,
    },

    /// Moment matching is impossible because the load is not over-dispersed.
    #[error("negative binomial fit needs variance > mean (mean {mean}, variance {variance})")]
    NotOverdispersed { mean: f64, variance: f64 },

    /// The inverted PMF failed its normalization check.
    #[error("PGF inversion failed quality check: {0}")]
    Inversion(String),

    /// The rate coverage is conditioned on a non-empty cell, which never happens.
    #[error("rate coverage undefined: the typical cell is empty with probability 1")]
    EmptyCell,

    /// The SIR coverage integral left `[0, 1]` or diverged under the
    /// requested reading of its kernel.
    #[error("SIR coverage under the {reading} kernel is not a probability ({value})")]
    Transcription { reading: String, value: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Error {
    Error::Domain {
        function,
        message: message.into(),
    }
}

pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Invalid {
        field: field.into(),
        message: message.into(),
    }
}
