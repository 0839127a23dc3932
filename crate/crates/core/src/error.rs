use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario configuration could not be parsed: {0}")]
    Config(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("filter is degenerate (w^H s = 0 or non-finite)")]
    DegenerateFilter,

    #[error("transmit power must be strictly positive, got {0}")]
    ZeroPower(f64),

    #[error("coordinate denominator is not strictly positive (c = {c_abs}, d = {d})")]
    NonPositiveDenominator { c_abs: f64, d: f64 },

    #[error("coordinate feasible set is empty")]
    EmptyFeasibleSet,

    #[error("initial code is infeasible: {0}")]
    Infeasible(String),

    #[error("interference-plus-clutter covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
