use thiserror::Error;

/// Errors produced by graph construction, discretization, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("nonpositive length on segment {segment}: {length}")]
    NonpositiveLength { segment: usize, length: f64 },

    #[error("graph is disconnected: vertex {0:?} unreachable from vertex 0")]
    Disconnected(String),

    #[error("unknown vertex label {0:?}")]
    UnknownVertex(String),

    #[error("invalid graph point: segment {segment}, offset {offset} outside [0, {length}]")]
    InvalidPoint {
        segment: usize,
        offset: f64,
        length: f64,
    },

    #[error("n_target {given} below the {needed} mandatory vertices")]
    TargetTooSmall { given: usize, needed: usize },

    #[error("measure total mass {0} differs from 1 beyond tolerance")]
    MassNotOne(f64),

    #[error("measure atom or density breakpoint at {0} is not a model vertex")]
    PointNotInModel(String),

    #[error("functions/measures built on different models")]
    ModelMismatch,

    #[error("requested {requested} eigenvalue clusters but the constrained space has dimension {available}")]
    TooManyClusters { requested: usize, available: usize },

    #[error("mass vector is identically zero")]
    ZeroMassVector,

    #[error("deflation denominator is zero: input lies in the span of the basis and constants")]
    DeflationDegenerate,

    #[error("function is not orthogonal to the measure (integral {0})")]
    NotMuOrthogonal(f64),

    #[error("deflation basis is not an orthonormal measure-orthogonal family")]
    BadBasis,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("orthogonal complement is empty")]
    EmptyComplement,

    #[error("{0} is not a vertex of the model")]
    NotAVertex(String),

    #[error("no eigenvalue roots found below lambda_max = {0}")]
    NoRoots(f64),

    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
