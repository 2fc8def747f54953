use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid exponent {0}: expected a number >= 1 or `inf`")]
    InvalidExponent(String),

    #[error("invalid dimension {0}: expected d >= 1")]
    InvalidDimension(usize),

    #[error("invalid space `{0}`: expected lp:p=<p|inf>,dim=<d>")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tuple length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty tuple")]
    EmptyTuple,

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("degenerate input: all vectors of the tuple are zero")]
    DegenerateTuple,

    #[error("n = {n} out of range: expected {min} <= n <= {max}")]
    NOutOfRange { n: usize, min: usize, max: usize },

    #[error("exponent p = {0} unsupported here ({1})")]
    UnsupportedExponent(String, &'static str),

    #[error("dimension precondition unmet for {claim}: requires {requirement}, got d = {dim}")]
    DimensionPrecondition { claim: &'static str, requirement: String, dim: usize },

    #[error("no closed form known for {0}")]
    NoClosedForm(String),

    #[error("unsupported norm for extreme-point enumeration: p = {0}")]
    UnsupportedNorm(String),

    #[error("enumeration budget exceeded: {needed} tuples > budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
}
