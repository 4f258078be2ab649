use crate::design::VerificationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),

    #[error("TD({k},{q}) requires k <= q + 1")]
    KTooLarge { k: usize, q: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid weighting: {0}")]
    InvalidWeighting(String),

    #[error("invalid difference family: {0}")]
    InvalidFamily(String),

    #[error("no ({v},{k},1) difference family can exist: divisibility fails")]
    Infeasible { v: usize, k: usize },

    #[error("difference family search for ({v},{k},1) exhausted without a solution")]
    NotFound { v: usize, k: usize },

    #[error("no ingredient available: {0}")]
    SupplierFailure(String),

    #[error("ingredient missing: {0}")]
    IngredientMissing(String),

    #[error("ingredient invalid: {0}")]
    IngredientInvalid(String),

    #[error("blocks {0} and {1} are not disjoint")]
    NotDisjoint(usize, usize),

    #[error("block {0} is not a transversal of the groups")]
    NotTransversal(usize),

    #[error("{targets} targets requested but only {available} disjoint blocks given")]
    TooManyTargets { targets: usize, available: usize },

    #[error("{0:?} is not a block of the design")]
    NotABlock(Vec<usize>),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("ingredient has {found} disjoint blocks, {required} required")]
    AlphaUnavailable { required: usize, found: usize },

    #[error("exact search limited to {cap} blocks, design has {blocks}")]
    SizeLimitExceeded { blocks: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("verification failed: {0}")]
    VerificationFailed(Box<VerificationReport>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 1 for a failed verification, 3 for a missing or
    /// unusable ingredient, 2 for everything else (bad arguments, unmet
    /// preconditions, unreadable input).
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::VerificationFailed(_) => 1,
            Error::IngredientMissing(_)
            | Error::IngredientInvalid(_)
            | Error::SupplierFailure(_)
            | Error::AlphaUnavailable { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn schema(field: &str, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
