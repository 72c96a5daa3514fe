use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0} violated")]
    InvalidParams(String),

    #[error("invalid quadrature configuration: {0}")]
    InvalidQuadrature(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    QuadratureFailed { estimate: f64, error: f64 },

    #[error("computed alpha {alpha} below the lower bound {bound}")]
    AlphaTooSmall { alpha: f64, bound: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time {0} is not a grid point")]
    OffGrid(f64),

    #[error("variance {name} = {value} outside [{lo}, {hi}]")]
    VarianceOutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("invalid chirp: {0}")]
    InvalidChirp(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("horizon required: tail supremum of a non-monotone parametric sequence")]
    HorizonRequired,

    #[error("horizon exhausted: no admissible index for window {window}")]
    HorizonExhausted { window: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
