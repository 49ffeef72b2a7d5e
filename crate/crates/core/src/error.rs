use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("monomial of degree {degree} lies outside the basis of degree {basis_degree}")]
    OutOfBasis { degree: u32, basis_degree: u32 },

    #[error("variable count mismatch: expected {expected}, got {got}")]
    VariableCount { expected: usize, got: usize },

    #[error("requested degree {requested} is below the system degree {system}")]
    DegreeTooLow { requested: u32, system: u32 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("coordinate change is singular or ill-conditioned (condition number {condition:e})")]
    SingularTransform { condition: f64 },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("basis is rank deficient: rank {rank} of {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("vector of length {len} is not a packed symmetric matrix")]
    NotTriangular { len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("monomial space of size {size} exceeds the cap of {cap}")]
    MemoryCap { size: u128, cap: usize },

    #[error("zero polynomial system has no involutive form")]
    ZeroSystem,

    #[error("no projectively involutive form found within {max_k} prolongations")]
    NonTermination { max_k: usize },

    #[error("lifted moment matrix violates the kernel constraint (residual {residual:e})")]
    Inconsistent { residual: f64 },

    #[error("facial reduction certificate has no usable null space")]
    EmptyNullSpace,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
