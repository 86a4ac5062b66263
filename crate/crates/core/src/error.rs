use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeketeError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    #[error("basis index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid weight: component {component} evaluated to {value} at {point}")]
    InvalidWeight {
        component: usize,
        value: f64,
        point: String,
    },

    #[error("tabulated weight has no value at {0}")]
    NotTabulated(String),

    #[error("unsupported mesh: {0}")]
    UnsupportedMesh(String),

    #[error("mesh has {mesh} points but at least {needed} are required")]
    MeshTooSmall { mesh: usize, needed: usize },

    #[error("every candidate configuration is singular")]
    AllSingular,

    #[error("invalid current: {0}")]
    InvalidCurrent(String),

    #[error("component point sets overlap at {0}")]
    OverlappingComponents(String),

    #[error("measure is not determining for the weighted polynomial space")]
    NotDetermining,

    #[error("currents are not unisolvent (singular Vandermonde)")]
    NotUnisolvent,

    #[error("enumeration budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("form degree k={k} out of range for n={n}")]
    FormDegree { n: usize, k: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for FeketeError {
    fn from(e: std::io::Error) -> Self {
        FeketeError::Io(e.to_string())
    }
}

impl From<csv::Error> for FeketeError {
    fn from(e: csv::Error) -> Self {
        FeketeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FeketeError>;
