use thiserror::Error;

/// Errors raised by the graph, linear-algebra and sampling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is not decomposable (contains a chordless cycle of length >= 4)")]
    NotDecomposable,
    #[error("graph is not homogeneous (not decomposable or contains an induced 4-path)")]
    NotHomogeneous,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid vertex ordering: {0}")]
    InvalidOrdering(String),
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not in P_G: {0}")]
    NotInPG(String),
    #[error("clique submatrix over {0:?} is not positive definite")]
    CliqueNotPositiveDefinite(Vec<usize>),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("path-sum inverse limited to m <= {cap}, got m = {m}")]
    DimensionCapExceeded { m: usize, cap: usize },
    #[error("({u}, {v}) is not a lower-triangular edge of the graph")]
    EdgeNotPresent { u: usize, v: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("shape parameter at vertex {vertex} gives non-positive inverse-gamma shape {shape}")]
    NonIntegrableShape { vertex: usize, shape: f64 },
    #[error("posterior shape parameters fail the integrability condition at vertex {vertex}")]
    NonIntegrablePosterior { vertex: usize },
    #[error("prior shape parameters fail the integrability condition at vertex {vertex}")]
    NonIntegrable { vertex: usize },
    #[error("moment does not exist: shape at vertex {vertex} must exceed |N<(i)| + 4")]
    MomentDoesNotExist { vertex: usize },
    #[error("conditional precision is singular for column {0}")]
    SingularPrecision(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::CliqueNotPositiveDefinite(_)
                | Error::SingularPrecision(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
