use thiserror::Error;

/// Errors produced by the lclab operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid quadruple ({k}, {l}, {m}, {n}): need k <= l <= m <= n and k + n = l + m")]
    InvalidQuadruple { k: i64, l: i64, m: i64, n: i64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("binomial index {index} exceeds the exact table limit {limit}")]
    BinomialOverflow { index: u64, limit: u64 },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("pieces with different exponential rates cannot be combined ({0} vs {1})")]
    MixedRates(f64, f64),

    #[error("non-negativity certification failed: value {value:e} at x = {at}")]
    NotNonNegative { value: f64, at: f64 },

    #[error("intensity contract violated at t = {t}: rate {rate} outside [0, {cap}]")]
    ContractViolation { t: f64, rate: f64, cap: f64 },

    #[error("vanishing coefficient: {0}")]
    VanishingCoefficient(String),

    #[error("state truncation too small: {0}")]
    Truncation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
