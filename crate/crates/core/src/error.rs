use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain size {0} is outside the supported range 2..={max}", max = crate::relation::MAX_K)]
    InvalidDomain(usize),

    #[error("element {value} is out of range for domain size {k}")]
    ElementOutOfRange { value: usize, k: usize },

    #[error("tuple has length {found}, expected {expected}")]
    WrongTupleLength { expected: usize, found: usize },

    #[error("relation with k={k} and arity {arity} exceeds the size cap of {cap} tuples")]
    TooLarge { k: usize, arity: usize, cap: usize },

    #[error("coordinate {index} out of range for arity {arity}")]
    CoordinateOutOfRange { index: usize, arity: usize },

    #[error("identification map is invalid: {0}")]
    InvalidMap(String),

    #[error("relations differ in shape: {0}")]
    ShapeMismatch(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("duplicate relation name `{0}`")]
    DuplicateName(String),

    #[error("relation name `{0}` is reserved or empty")]
    ReservedName(String),

    #[error("malformed formula: {0}")]
    MalformedFormula(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
