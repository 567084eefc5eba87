use thiserror::Error;

use crate::expr::ParseError;

/// Errors raised by the toolkit.
///
/// Variants are grouped by how a batch caller should react: configuration
/// problems (bad input), check failures that carry a diagnosis, and numerical
/// breakdowns.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("field evaluation failed: {0}")]
    Field(String),

    #[error("observable is not admissible: {0}")]
    Admissibility(String),

    #[error("form degeneracy: {0}")]
    FormDegeneracy(String),

    #[error("transversality error: {0}")]
    Transversality(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate lift: {0}")]
    DegenerateLift(String),

    #[error("near-singular linear system (condition estimate {0:.3e})")]
    NearSingular(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("orbit does not close within the search budget: {0}")]
    NonCompactOrbit(String),

    #[error("tolerance not reached: {0}")]
    Tolerance(String),

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("gallery regression: {0}")]
    Regression(String),
}

impl Error {
    /// True for errors caused by bad user input rather than by the mathematics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::Config(_)
                | Error::Input(_)
                | Error::Parse(_)
                | Error::UnknownId(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
