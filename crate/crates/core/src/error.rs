//! Error type shared by every module in the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, OddsError>;

#[derive(Debug, Error)]
pub enum OddsError {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller supplied an invalid input (malformed vector, bad config, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// An iterative method failed to converge or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A query fell outside the range over which an interpolant is defined.
    #[error("{value} is outside the interpolation range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    /// Least-squares design matrix lost rank; names the dropped basis columns.
    #[error("rank-deficient design; dependent directions: {}", directions.join(", "))]
    RankDeficient {
        directions: Vec<String>,
        /// Coefficients of the basic solution (dependent columns set to zero).
        coefficients: Vec<f64>,
        residual_std: f64,
    },

    /// Series could not be aligned or parsed.
    #[error("ingestion error: {0}")]
    Ingest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl OddsError {
    /// True for failures of iterative numerics (as opposed to bad inputs).
    pub fn is_numeric(&self) -> bool {
        matches!(self, OddsError::Numeric(_))
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> OddsError {
    OddsError::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> OddsError {
    OddsError::Input(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> OddsError {
    OddsError::Numeric(msg.into())
}
