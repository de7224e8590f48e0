use alloc::string::String;

/// Errors raised by field evaluation and the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}: a vector field needs at least one state")]
    InvalidDimension(usize),
    #[error("inconsistent dimension: expected {expected}, got {got}")]
    InconsistentDimension { expected: usize, got: usize },
    #[error("non-finite value in component {index}")]
    NonFinite { index: usize },
    #[error("non-finite Jacobian entry at ({row}, {col})")]
    NonFiniteDerivative { row: usize, col: usize },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown parameter `{name}` for model `{model}`")]
    UnknownParameter { model: String, name: String },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular matrix")]
    SingularMatrix,
    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("step size underflow at t = {t} (problem may be stiff)")]
    StepSizeUnderflow { t: f64 },
    #[error("fixed point is not a saddle: no {0} direction")]
    NotASaddle(&'static str),
    #[error("invalid orbit: no Floquet multiplier near 1")]
    InvalidOrbit,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
