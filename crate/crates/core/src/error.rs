use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown outcome `{outcome}` in space {space}")]
    UnknownOutcome { space: String, outcome: String },

    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("{space} is not a product with factor {factor}")]
    NotAProductSpace { space: String, factor: String },

    #[error("observation `{0}` has zero evidence; the posterior there is undefined")]
    UnsupportedObservation(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fitness diverged: {0}")]
    DivergedFitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::SpaceMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
