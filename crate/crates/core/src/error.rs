use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid of {requested} qubits exceeds the capacity limit of {limit} qubits")]
    Capacity { requested: usize, limit: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cannot normalize: samples have zero norm")]
    DegenerateNorm,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("qubit collision: {0}")]
    QubitCollision(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("divergence constraint violated: {0}")]
    Constraint(String),

    #[error("no reference oracle available: {0}")]
    NoOracle(String),

    #[error("integration became unstable: {0}")]
    Instability(String),
}
