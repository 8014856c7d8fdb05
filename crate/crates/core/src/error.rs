use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("element {element} out of range for a universe of size {size}")]
    OutOfRange { element: usize, size: usize },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("enumeration bound exceeded: {requested} > {bound}")]
    BoundExceeded { requested: usize, bound: usize },

    #[error("lattice budget exceeded: {size} elements > {budget}")]
    Budget { size: u128, budget: u128 },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),

    #[error("operation `{0}` is not idempotent")]
    NotIdempotent(String),

    #[error("image of `{symbol}` is {image:?}, expected {expected:?}")]
    ImageMismatch {
        symbol: String,
        image: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("table {0} is not a bijection")]
    NotBijective(usize),

    #[error("partition is not a congruence of the base algebra")]
    NotCongruence,

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid overalgebra spec: {0}")]
    InvalidSpec(String),

    #[error("operation `{symbol}` is ill-defined at element {element}: clauses give {values:?}")]
    IllDefined {
        symbol: String,
        element: usize,
        values: Vec<usize>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}
