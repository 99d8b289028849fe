use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the manifold pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("label mismatch: expected {expected} labels, found {found}")]
    LabelMismatch { expected: usize, found: usize },
    #[error("unknown network id `{0}`")]
    UnknownNetwork(String),
    #[error("{path}: expected {expected} rows, found {found}")]
    RowCountMismatch {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: non-finite value `{value}`")]
    NonFiniteValue {
        path: String,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: {message}")]
    ParseError {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid kernel bandwidth {0}")]
    InvalidSigma(f64),
    #[error("row {0} of the affinity matrix sums to zero")]
    ZeroRow(usize),
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("degenerate spectrum: every |λ|^t vanishes")]
    DegenerateSpectrum,
    #[error("class {0} has fewer than two members")]
    DegenerateClass(usize),
    #[error("class {0} has no members")]
    EmptyClass(usize),

    #[error("network `{0}` has no weight matrix in the manifest")]
    MissingWeights(String),
    #[error("k = {k} must be at least 1 and smaller than the point count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("signatures were built with different methods")]
    MethodMismatch,
    #[error("need at least {needed} networks, got {got}")]
    TooFewNetworks { needed: usize, got: usize },

    #[error("bandwidth is zero for every point (all points coincide)")]
    DegenerateBandwidth,

    #[error("cut size k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{n} points exceeds the Rips point cap of {cap}")]
    TooManyPoints { n: usize, cap: usize },
    #[error("invalid filtration radius {0}")]
    BadRadius(f64),
    #[error("diagrams carry infinite points; choose a policy that removes or caps them")]
    InfinitePointMismatch,

    #[error("all pairwise network distances are zero")]
    DegenerateDistances,

    #[error("no (weight decay, momentum) combination available under the modal learning rate")]
    InsufficientDiversity,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenFailure(_) | Error::DegenerateSpectrum | Error::ZeroRow(_)
        )
    }
}
