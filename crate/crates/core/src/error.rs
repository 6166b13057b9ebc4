use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("singular frame: |det [a|z]| = {det:e} at {point:?}")]
    SingularFrame { det: f64, point: Vec<f64> },

    #[error("assumption unsatisfied: relative residual {residual:e}")]
    AssumptionUnsatisfied { residual: f64 },

    #[error("no preset shift vectors for this structure")]
    NoPresetLambda,

    #[error("curvature bound {0} is not positive")]
    NonpositiveKappa(f64),

    #[error("unstable run: non-finite density at step {step}")]
    Unstable { step: usize },

    #[error("bad initial density: {0}")]
    BadInitial(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
