//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("evaluation error: {0}")]
    Domain(String),
    #[error("singular matrix")]
    Singular,
    #[error("degenerate metric at {0:?}")]
    DegenerateMetric([f64; 4]),
    #[error("point {0:?} outside the chart domain")]
    OutsideDomain([f64; 4]),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid embedding `{name}`: {reason}")]
    InvalidEmbedding { name: String, reason: String },
    #[error("support escapes the image domain: {0}")]
    SupportEscapes(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("weight mismatch: expected {expected}, got {got}")]
    WeightMismatch { expected: f64, got: f64 },
    #[error("pair outside the convex patch (separation {separation}, radius {radius})")]
    OutsidePatch { separation: f64, radius: f64 },
    #[error("Newton iteration did not converge; residual trace {trace:?}")]
    NewtonDiverged { trace: Vec<f64> },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("pair is not spacelike (sigma = {0})")]
    NotSpacelike(f64),
    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("support touches the chart boundary light cone: {0}")]
    CausalSupport(String),
    #[error("spacetime mismatch: expected `{expected}`, got `{got}`")]
    SpacetimeMismatch { expected: String, got: String },
    #[error("index {index} out of range for power {k}")]
    RenormIndex { index: usize, k: usize },
    #[error("catalog error at {location}: {message}")]
    Catalog { location: String, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
