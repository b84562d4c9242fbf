use thiserror::Error;

/// Errors raised by model construction and the audits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported: 2..=16)")]
    UnsupportedDimension(usize),

    #[error("zero-norm vector cannot be normalized")]
    ZeroVector,

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("effects do not sum to the identity (max deviation {0:.3e})")]
    IncompletePovm(f64),

    #[error("context vectors are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("degenerate spectrum (minimum eigenvalue gap {0:.3e})")]
    DegenerateSpectrum(f64),

    #[error("random draw degenerate after {0} retries")]
    DegenerateDraw(usize),

    #[error("observable does not commute with context {context} (commutator norm {norm:.3e})")]
    Incompatible { context: usize, norm: f64 },

    #[error("projectors commute; the construction needs a non-commuting pair")]
    Commuting,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("event has {0} coupled coordinates; exact evaluation is limited to 20")]
    EventTooComplex(usize),

    #[error("ontic space of {0} states exceeds the materialization limit")]
    SpaceTooLarge(String),

    #[error("only {found} contexts contain the state, {needed} required")]
    InsufficientContexts { found: usize, needed: usize },

    #[error("state {state} reaches measure {measure:.6} below the floor {floor:.6}")]
    MeasureFloorNotMet { state: String, measure: f64, floor: f64 },

    #[error("retry budget exhausted for target {target}: blocking pair ({first}, {second}) with fidelity {fidelity:.3e}")]
    BudgetExhausted {
        target: usize,
        first: String,
        second: String,
        fidelity: f64,
    },

    #[error("approximation defect {defect:.3e} exceeds epsilon {epsilon:.3e}")]
    NotCovered { defect: f64, epsilon: f64 },

    #[error(
        "perturbed effect is not a valid POVM element (min eigenvalue {min_eigenvalue:.3e} at eta {eta})"
    )]
    NonPhysicalPerturbation { eta: f64, min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
