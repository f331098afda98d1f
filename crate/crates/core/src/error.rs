use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate indices start at 1")]
    ZeroIndex,

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("window {window} outside [1, {horizon}]")]
    WindowRange { window: u128, horizon: u128 },

    #[error("return set is empty")]
    EmptyReturnSet,

    #[error("invalid return set: {0}")]
    InvalidReturnSet(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("vector is not in X0: P x lies in no generated kernel")]
    NotInX0,

    #[error(
        "no certificate within the generated range (searched {searched} levels, best upper bracket {best:.3e})"
    )]
    CertificateNotFound { best: f64, searched: usize },

    #[error("witness check failed: {0}")]
    InvalidWitness(String),

    #[error("block structure: {0}")]
    Structure(String),

    #[error("vector has non-real entries but the operator acts on a real space")]
    FieldMismatch,

    #[error("diagonal entries {first} and {second} coincide")]
    RepeatedDiagonal { first: usize, second: usize },

    #[error("conjugate collision between diagonal entries {first} and {second}")]
    ConjugateCollision { first: usize, second: usize },

    #[error("matrix is not upper triangular (entry ({row}, {col}) is nonzero)")]
    NotUpperTriangular { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
