use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid regularity {reg} for degree {degree}")]
    InvalidRegularity { degree: usize, reg: i32 },
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("point {x} lies outside the parametric domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },
    #[error("pressure degree k' = {0} violates H1 conformity (k' >= 1 required)")]
    InvalidDegree(usize),
    #[error("at least {min} elements per direction required, got {got}")]
    TooFewElements { min: usize, got: usize },
    #[error("geometric map is singular at ({x}, {y}): det DF = {det:e}")]
    SingularMap { x: f64, y: f64, det: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid sparse matrix: {0}")]
    InvalidMatrix(String),
    #[error("sparsity pattern is not symmetric")]
    NonSymmetricPattern,
    #[error("nonpositive pivot {pivot:e} at row {row}")]
    Breakdown { row: usize, pivot: f64 },
    #[error("dense analysis of size {n} exceeds the cap {cap}; use a coarser mesh")]
    AnalysisCap { n: usize, cap: usize },
    #[error("preconditioner block `{block}` is not positive definite")]
    IndefinitePreconditioner { block: String },
    #[error("operator is not positive definite (p^T A p = {curvature:e})")]
    NotPositiveDefinite { curvature: f64 },
    #[error("unknown preconditioning strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
