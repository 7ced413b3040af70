use thiserror::Error;

/// Errors raised by the quantization engine, the pricers and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("codewords must be strictly increasing (violated at index {index})")]
    NotIncreasing { index: usize },

    #[error("codeword {value} at index {index} lies outside the support [{lo}, {hi}]")]
    OutsideSupport {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("the distribution does not provide a second lower partial expectation")]
    MissingSecondMoment,

    #[error("state {x} lies outside the model domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    #[error(
        "step {step}: codeword {value} at index {index} left the model domain; \
         rerun with an absorbing or reflecting boundary"
    )]
    CodewordOutsideDomain {
        step: usize,
        index: usize,
        value: f64,
    },

    #[error("step {step}: non-finite codeword at index {index}")]
    NonFiniteCodeword { step: usize, index: usize },

    #[error("affine update has zero scale")]
    ZeroScale,

    #[error("singular tridiagonal system (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
