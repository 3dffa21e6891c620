use thiserror::Error;

use crate::hardy::AtomViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} has no block decomposition")]
    ZeroIndex(u64),

    #[error("prefix index {i} out of range [2, {s}] for n = {n}")]
    PrefixIndexOutOfRange { n: u64, i: usize, s: usize },

    #[error("the complement of I_0 is empty")]
    EmptyComplement,

    #[error("resolution {actual} is too small, need at least {needed}")]
    ResolutionTooSmall { needed: u32, actual: u32 },

    #[error("resolution {requested} exceeds the {mode} cap of {cap}")]
    ResolutionCap { requested: u32, cap: u32, mode: &'static str },

    #[error("level {level} exceeds resolution {resolution}")]
    LevelOutOfRange { level: u32, resolution: u32 },

    #[error("index {index} not representable at resolution {resolution}")]
    IndexOutOfRange { index: u64, resolution: u32 },

    #[error("expected {expected} cell values, got {actual}")]
    CellCount { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("point is not in the complement of I_{0}")]
    NotInComplement(u32),

    #[error("p-atom violation: {0}")]
    Atom(#[from] AtomViolation),

    #[error("counterexample spec: {0}")]
    Spec(String),

    #[error("not exactly representable: {0}")]
    Inexact(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
