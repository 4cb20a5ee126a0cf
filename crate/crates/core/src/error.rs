use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration field violates its constraint.
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The stacked pair matrix has no numerical null space.
    #[error("signal alignment failed for pair {pair}: null space is empty (N={antennas}, M={pairs})")]
    AlignmentFailure {
        pair: usize,
        antennas: usize,
        pairs: usize,
    },

    /// The stacked alignment matrix G is too ill-conditioned to invert.
    #[error("ill-conditioned geometry: cond(G) = {cond:e} exceeds {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },

    /// A factorization that should succeed under the preconditions did not.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A sweep or scaling request is malformed.
    #[error("invalid experiment spec: {0}")]
    Spec(String),

    /// Too many trials had to be resampled.
    #[error("{resamples} of {trials} trials at grid point {grid_index} needed resampling (limit 1%)")]
    ResampleLimit {
        grid_index: usize,
        trials: usize,
        resamples: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}
