use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: Im(tau) = {0} must be positive")]
    InvalidLattice(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no curve: expected dimension {expected}, observed 0")]
    NoCurve { expected: usize },

    #[error("family {what} has dimension {observed}, expected {expected}")]
    Dimension {
        what: String,
        expected: usize,
        observed: usize,
    },

    #[error("point is not on the curve C0 (residual {0:e})")]
    NotOnCurve(f64),

    #[error("intersection search found {found} of {expected} points")]
    IntersectionSearch { expected: usize, found: usize },

    #[error("chord construction failed: {0}")]
    Chord(String),

    #[error("wave degeneracy: {0}")]
    WaveDegeneracy(String),

    #[error("elimination step {step} not divisible (residual {residual:e})")]
    Elimination { step: String, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
