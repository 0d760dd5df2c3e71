use thiserror::Error;

use crate::expr::ParseError;

/// Errors raised by scale construction, calculus operations and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time scale must contain at least one piece")]
    EmptyScale,
    #[error("negative coordinate {0} in scale piece")]
    NegativeCoordinate(f64),
    #[error("interval [{0}, {1}] has its endpoints reversed")]
    ReversedInterval(f64, f64),
    #[error("q-scale needs q > 1, got {0}")]
    InvalidQ(f64),
    #[error("q-scale needs kmin <= kmax, got kmin={0} kmax={1}")]
    InvalidExponentRange(i32, i32),
    #[error("non-finite coordinate in scale piece")]
    NonFinite,
    #[error("time {0} is not a member of the time scale")]
    NotInScale(f64),
    #[error("time {t} lies below the scale minimum {min}")]
    BelowScale { t: f64, min: f64 },
    #[error("invalid range: t1={t1} must be below t2={t2}")]
    InvalidRange { t1: f64, t2: f64 },
    #[error("time {0} is not a point of the working partition")]
    NotPartitionTime(f64),
    #[error("partition would hold {0} points, above the limit of {1}")]
    PartitionTooLarge(u64, u64),
    #[error("expression error: {0}")]
    Parse(#[from] ParseError),
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: &'static str },
    #[error("path and solution have mismatched time grids")]
    MismatchedPaths,
    #[error("table has {got} values but the partition has {expected} points")]
    TableLength { expected: usize, got: usize },
    #[error("regressivity violated on gap ({s_minus}, {s_plus}): factor {factor}")]
    NotRegressive { s_minus: f64, s_plus: f64, factor: f64 },
    #[error("coefficient must be deterministic (no dependence on x)")]
    NotDeterministic,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
