use thiserror::Error;

/// Errors surfaced by the library's domain operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Quantile argument outside the open unit interval.
    #[error("quantile requires gamma in (0, 1), got {0}")]
    QuantileDomain(f64),

    /// Critical fractile needs a positive margin: p > a > 0.
    #[error("critical fractile requires p > a > 0, got p = {p}, a = {a}")]
    NonPositiveMargin { p: f64, a: f64 },

    /// Wholesale price at or above the demand curve's zero-crossing price.
    #[error("infeasible market: wholesale price {a} >= theta0/theta1 = {h}")]
    InfeasibleMarket { a: f64, h: f64 },

    /// Parameter values violating a type invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Regret curves of different lengths cannot be aggregated.
    #[error("curve length mismatch: expected {expected}, got {got}")]
    CurveLengthMismatch { expected: usize, got: usize },

    /// Configuration file problem (parse error, unknown key, bad value).
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
