use thiserror::Error;

use crate::scalar::Scalar;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("matrix is singular")]
    Singular,
    #[error("malformed data: {0}")]
    Format(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no flat polynomial found up to degree {n_max} (best L1 norm {best})")]
    SearchExhausted { n_max: usize, best: Scalar },
    #[error("jet is not certified to lie in the covering set")]
    NotInA,
    #[error("construction invalid: {0}")]
    ConstructionInvalid(String),
    #[error("internal error: {0}")]
    Internal(String),
}
