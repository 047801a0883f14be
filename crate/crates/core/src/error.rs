use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subnormalized input not accepted here")]
    Subnormalized,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-redundancy checks disagree on a channel with {0} inputs")]
    InconsistentChecks(usize),

    #[error("not a polymatroid: {0}")]
    NotPolymatroid(String),

    #[error("rates exceed the concealment budget for subset {subset}: {rate} > {budget}")]
    RateAboveBudget { subset: String, rate: f64, budget: f64 },

    #[error("malformed claim: {0}")]
    MalformedClaim(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
