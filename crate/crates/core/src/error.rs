use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped roughly by the module that raises them, but a single
/// enum is shared so that pipelines (measurement chains, the Born counting
/// pipeline) can propagate errors from lower layers without conversion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // layouts and states
    #[error("subsystem labels must be non-empty")]
    EmptyLabel,
    #[error("subsystem {label:?} has dimension 0")]
    ZeroDimension { label: String },
    #[error("label {0:?} appears more than once")]
    LabelCollision(String),
    #[error("total dimension {dim} exceeds the guard of {guard}")]
    SpaceTooLarge { dim: u128, guard: usize },
    #[error("unknown subsystem label {0:?}")]
    UnknownLabel(String),
    #[error("state norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("layouts differ: {0}")]
    LayoutMismatch(String),
    #[error("matrix is not unitary (max deviation from identity {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("the set of kept subsystems is empty")]
    EmptyKeepSet,
    #[error("bipartition must split the layout into two non-empty parts")]
    InvalidBipartition,
    #[error("basis is not orthonormal and complete: {0}")]
    BadBasis(String),

    // information measures
    #[error("label sets overlap on {0:?}")]
    OverlappingSplit(String),
    #[error("redundancy ratio undefined: system entropy {entropy:e} bits")]
    UndefinedRatio { entropy: f64 },

    // measurement chain
    #[error("subsystem {label:?} is not in its ready state (weight {weight:e} outside |0>)")]
    ApparatusNotReady { label: String, weight: f64 },
    #[error("record overlap {0} outside [0, 1]")]
    BadOverlap(f64),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    // envariance and Born counting
    #[error("unitary acts on environment-side subsystem {0:?}")]
    SideViolation(String),
    #[error("Schmidt term index {index} out of range for {terms} terms")]
    BadIndex { index: usize, terms: usize },
    #[error("Schmidt decomposition does not describe this state")]
    SchmidtMismatch,
    #[error("Schmidt coefficients are not all equal (spread {spread:e})")]
    NotEqualAmplitude { spread: f64 },
    #[error("ancilla dimension {found} is smaller than the {needed} required")]
    AncillaTooSmall { needed: usize, found: usize },
    #[error("environment dimension {found} cannot hold {needed} record states")]
    EnvironmentTooSmall { needed: usize, found: usize },
    #[error("fine-graining plan does not match the state: {0}")]
    PlanMismatch(String),
    #[error("no commensurate approximation with denominator <= {cap}; use rational bounds")]
    UseBoundsInstead { cap: u64 },
    #[error("denominator {m} is smaller than the number of Schmidt terms {terms}")]
    MTooSmall { m: u64, terms: usize },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
