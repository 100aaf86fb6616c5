use thiserror::Error;

/// Errors produced by the workbench.
///
/// Variants split into two families: validation problems (bad input, shapes
/// that do not line up, malformed files) and numerical failures (solver
/// non-convergence, compatibility gates that reject the data). The CLI maps
/// the first family to exit code 1 and the second to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("axis {axis} out of range for a {dim}-dimensional chart")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("metric is not positive definite at node {node} (smallest eigenvalue {eigenvalue:e})")]
    SingularMetric { node: usize, eigenvalue: f64 },

    #[error("metric is not symmetric at node {node}")]
    AsymmetricMetric { node: usize },

    #[error("immersion differential is rank deficient at node {node} (smallest singular value {sigma:e})")]
    RankDeficient { node: usize, sigma: f64 },

    #[error("could not build {wanted} normal vectors at node {node}")]
    FrameConstruction { node: usize, wanted: usize },

    #[error("matrix is not orthogonal (defect {0:e})")]
    NotOrthogonal(f64),

    #[error("cochain degree {degree} invalid for this operation on a {dim}-torus")]
    Degree { degree: usize, dim: usize },

    #[error("oscillation with epsilon {epsilon} is unresolved: {cells_per_period:.2} cells per period, need at least {required}")]
    UnresolvedOscillation {
        epsilon: f64,
        cells_per_period: f64,
        required: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    CgNonConvergence { iterations: usize, residual: f64 },

    #[error("GCR residual {residual:e} exceeds the realization gate {gate:e}")]
    GateViolation { residual: f64, gate: f64 },

    #[error("exponential step too large: |W| h = {0:.3}")]
    StepTooLarge(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CgNonConvergence { .. } | Error::GateViolation { .. } | Error::StepTooLarge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
