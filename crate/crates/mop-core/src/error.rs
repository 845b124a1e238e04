use crate::prelude::*;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Recurrence or symbol parameters are unusable (depth, period, signs).
    InvalidSpec(String),
    /// An index tuple or order argument is outside the supported range.
    InvalidIndices(String),
    /// A brute-force routine was asked for more than it can enumerate.
    SizeLimit { what: &'static str, limit: usize },
    /// Two independent evaluations of the same quantity disagree.
    Consistency(String),
    /// Block shapes do not line up.
    SizeMismatch(String),
    /// A pattern prefix admits no completion.
    InfeasiblePrefix,
    /// An iteration stopped improving.
    NoConvergence(String),
    /// A matrix that had to be inverted is singular.
    Singular,
    /// Measure inputs violate mass or support constraints.
    Admissibility(String),
    /// The point sits on a root collision and the requested basis is undefined.
    Degenerate(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(m) => write!(f, "invalid recurrence: {m}"),
            Error::InvalidIndices(m) => write!(f, "invalid indices: {m}"),
            Error::SizeLimit { what, limit } => write!(f, "{what} exceeds size limit {limit}"),
            Error::Consistency(m) => write!(f, "consistency check failed: {m}"),
            Error::SizeMismatch(m) => write!(f, "block size mismatch: {m}"),
            Error::InfeasiblePrefix => write!(f, "pattern prefix cannot be completed"),
            Error::NoConvergence(m) => write!(f, "no convergence: {m}"),
            Error::Singular => write!(f, "singular matrix"),
            Error::Admissibility(m) => write!(f, "inadmissible measure: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate point: {m}"),
        }
    }
}

impl core::error::Error for Error {}
