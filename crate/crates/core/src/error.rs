use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("boundary under-resolved: piece {piece} gets {nodes} nodes (need at least 3)")]
    BoundaryUnderResolved { piece: usize, nodes: usize },

    #[error("node generation exceeded {limit} nodes; spacing too small or domain unbounded")]
    NodeLimitExceeded { limit: usize },

    #[error("requested {k} neighbours but the node set only has {n} nodes")]
    TooFewNodes { k: usize, n: usize },

    #[error("invalid basis configuration: {0}")]
    InvalidBasis(String),

    #[error("singular RBF-FD system at node {node}")]
    SingularStencil { node: usize },

    #[error("sparse matrix is singular: {0}")]
    SingularMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix row {row} has no entries")]
    EmptyRow { row: usize },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("return mapping did not converge in {iterations} iterations (residual {residual:e})")]
    ReturnMappingDiverged { iterations: usize, residual: f64 },

    #[error("return mapping requested on an admissible state (yield function {0:e})")]
    NotYielding(f64),

    #[error("plastic flow direction undefined for zero von Mises stress")]
    UndefinedFlowDirection,

    #[error("boundary node {node} lacks a normal for a traction condition")]
    MissingNormal { node: usize },

    #[error("Picard iteration did not converge in load step {step} after {iterations} iterations (last residual {last:e})")]
    PicardDiverged {
        step: usize,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("pressure {pressure} exceeds the limit load {limit}")]
    BeyondLimitLoad { pressure: f64, limit: f64 },

    #[error("front not localized: {0}")]
    FrontNotLocalized(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
