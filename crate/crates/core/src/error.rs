use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("field of size {size} exceeds the configured cap {cap}")]
    FieldTooLarge { size: u128, cap: u64 },
    #[error("{what} has {got} elements, above the enumeration cap {cap}")]
    EnumerationCap { what: &'static str, got: u128, cap: u64 },
    #[error("level {level} does not divide the tower degree {m}")]
    NotDivisor { level: u32, m: u32 },
    #[error("cannot embed level {from} into level {to}")]
    BadEmbedding { from: u32, to: u32 },
    #[error("operands live at different levels ({0} and {1})")]
    LevelMismatch(u32, u32),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("conductors {0} and {1} have no common lift below the cap {2}")]
    ConductorCap(u64, u64, u64),
    #[error("coefficient not divisible by {0}")]
    NotDivisible(i64),
    #[error("{0}")]
    NotMember(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}
