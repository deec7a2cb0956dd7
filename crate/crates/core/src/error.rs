use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("degenerate table: every entry is zero")]
    DegenerateTable,

    #[error("singular basis matrix: {0}")]
    SingularBasis(String),

    #[error("inconsistent rank: {0}")]
    InconsistentRank(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("inconsistent table: {0}")]
    InconsistentTable(String),

    #[error("feasibility solver failure: {0}")]
    SolverFailure(String),

    #[error("outcomes belong to different measurements: {0}")]
    MixedMeasurements(String),

    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),

    #[error("states are not distinguishable: {0}")]
    NotDistinguishable(String),

    #[error("state '{0}' is outside the declared map domain")]
    OutOfDomain(String),

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("operator set does not span the Hermitian space: rank {rank} < {needed}")]
    NotSpanning { rank: usize, needed: usize },

    #[error("invalid quantum model: {0}")]
    InvalidModel(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
