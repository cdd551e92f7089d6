use std::time::Duration;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid order {0}")]
    InvalidOrder(usize),
    #[error("not a permutation of 0..{len}: {what}")]
    NotAPermutation { what: &'static str, len: usize },
    #[error("squares are not orthogonal")]
    NotOrthogonal,
    #[error("no orthogonal pair construction for order {0}")]
    UnsupportedOrder(usize),
    #[error("orthogonal mate search for order {order} gave up after {elapsed:?}")]
    ConstructionFailed { order: usize, elapsed: Duration },
    #[error("input is not a valid Latin square: {0}")]
    InvalidSquare(String),
    #[error("input is not a valid Latin hypercube: {0}")]
    InvalidHypercube(String),
    #[error("order {order} exceeds the guard of {limit}")]
    TooLarge { order: usize, limit: usize },
    #[error("not a transversal: {0}")]
    NotATransversal(String),
    #[error("k = floor(b - b^0.9) is {k} for b = {b}; need k >= 1")]
    KTooSmall { b: u64, k: i64 },
    #[error("ell = n - b*k = {ell}; need at least 3")]
    EllTooSmall { ell: i64 },
    #[error("subsquare order {0} has no orthogonal pair")]
    UnsupportedSubsquareOrder(usize),
    #[error("target order {target} is below the smallest instance {min}")]
    TooSmallTarget { target: u64, min: u64 },
    #[error("padding size s = {0} is below 3")]
    STooSmall(i64),
    #[error("padding size s = {s} exceeds the {max} special transversals")]
    STooLarge { s: u64, max: u64 },
    #[error("could not build a corner square of order {0} with a transversal")]
    LStarConstructionFailed(usize),
    #[error("bound is undefined: {0}")]
    DomainError(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
