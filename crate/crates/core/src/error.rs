use thiserror::Error;

/// Errors raised anywhere in the basis / integral / SCF / gradient pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter graph: {0}")]
    Graph(String),

    #[error("cycle detected in parameter graph at slot `{0}`")]
    Cycle(String),

    #[error("unknown parameter or slot id `{0}`")]
    UnknownId(String),

    #[error("exponent slot `{slot}` evaluated to non-positive value {value}")]
    NonPositiveExponent { slot: String, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid orbital: {0}")]
    Orbital(String),

    #[error("zero-norm function (self-overlap {0:e})")]
    ZeroNorm(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown element `{0}`")]
    UnknownElement(String),

    #[error("overlap matrix is linearly dependent (smallest eigenvalue {0:e})")]
    LinearDependence(f64),

    #[error("invalid electron configuration: {0}")]
    Electrons(String),

    #[error("non-finite energy encountered during SCF")]
    NonFiniteEnergy,

    #[error("SCF not converged; gradients require a converged solution")]
    NotConverged,

    #[error("search direction is not a descent direction (slope {0:e})")]
    NotDescent(f64),

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
