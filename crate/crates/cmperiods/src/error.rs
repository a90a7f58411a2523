use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("level must be at least {min}, got {got}")]
    LevelTooSmall { min: u32, got: u32 },
    #[error("{0} is not a unit modulo the ring modulus")]
    NotAUnit(u64),
    #[error("{value} is not a nonzero square modulo {q}")]
    NotASquare { value: u64, q: u64 },
    #[error("conductor mismatch: {0} and {1} have no common field in scope")]
    ConductorMismatch(u64, u64),
    #[error("character is not primitive of conductor q^{m}")]
    NotPrimitive { m: u32 },
    #[error("character has conductor q^{got}, expected q^{want}")]
    WrongConductor { got: u32, want: u32 },
    #[error("prime {ell} divides the conductor {n}")]
    EllDividesConductor { ell: u64, n: u64 },
    #[error("division is not exact: {0}")]
    InexactDivision(String),
    #[error("{0} is not a fundamental discriminant of an imaginary quadratic field")]
    NotFundamental(i64),
    #[error("parity mismatch: {0}")]
    Parity(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
