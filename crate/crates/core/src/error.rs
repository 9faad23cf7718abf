//! Crate-wide error type.

use thiserror::Error;

use crate::vertex::Vertex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("unknown axis {0}")]
    UnknownAxis(Vertex),

    #[error("duplicate axis {0}")]
    DuplicateAxis(Vertex),

    #[error("kernels live on different probability spaces")]
    SpaceMismatch,

    #[error("value array has {got} entries, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("kernel is not canonical: integrating out axis {axis} leaves sup {defect:e}")]
    NotCanonical { axis: Vertex, defect: f64 },

    #[error("sample of size {n} cannot feed a U-statistic of order {k}")]
    SampleTooShort { n: usize, k: usize },

    #[error("diagram is incompatible with the kernel orders: {0}")]
    IncompatibleDiagram(String),

    #[error("vertex count {0} is odd; perfect matchings need an even count")]
    OddVertexCount(usize),

    #[error("closed diagram has an odd number of permissible copy vertices ({0})")]
    OddCopyCount(usize),

    #[error("missing constant {0}: supply an explicit value (the bound leaves it unspecified)")]
    MissingConstant(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonpositive combinatorial factor at level {level}: term must be excluded, not clamped")]
    NonpositiveFactor { level: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed number {0:?}: expected a float or a \"p/q\" string")]
    BadNumber(String),
}

pub type Result<T> = std::result::Result<T, Error>;
