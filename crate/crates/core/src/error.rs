use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("need at least {required} points, got {n}")]
    TooFewPoints { n: usize, required: usize },

    #[error("non-finite coordinate at point {point}, coordinate {coord}")]
    NonFinite { point: usize, coord: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),

    #[error("need at least two observed label levels, got {k}")]
    TooFewLevels { k: usize },

    #[error("invalid label code {code} for {k} levels")]
    InvalidLabel { code: usize, k: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("degenerate neighbor graph: W_n = {w_n} leaves the covariance singular")]
    DegenerateGraph { w_n: f64 },

    #[error("covariance matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("conditional coefficient undefined: psi(X,Y) = {psi} is (numerically) one")]
    ConditionalUndefined { psi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
