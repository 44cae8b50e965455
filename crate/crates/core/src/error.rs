use crate::expr::{EvalError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid phase point: {0}")]
    InvalidPoint(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular metric at {point}: |det g| = {det:e} below threshold {threshold:e}")]
    SingularMetric { point: String, det: f64, threshold: f64 },
    #[error("metric determinant {det:e} is not positive at {point}")]
    NonPositiveDeterminant { point: String, det: f64 },
    #[error("{what} fails the degree-{degree} homogeneity test: residual {residual:e} exceeds {tolerance:e}")]
    Homogeneity { what: String, degree: f64, residual: f64, tolerance: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error("sprays are not projectively related by the declared factor: residual {residual:e} exceeds {tolerance:e}")]
    NotProjectivelyRelated { residual: f64, tolerance: f64 },
    #[error("fibre integral depends on the path: discrepancy {discrepancy:e} exceeds {tolerance:e}")]
    PathDependent { discrepancy: f64, tolerance: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unknown monitor `{0}`")]
    UnknownMonitor(String),
    #[error("step size too large: relative energy change {drift:e} in one step at t = {t}")]
    StepTooLarge { t: f64, drift: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn describe(p: &crate::point::PhasePoint) -> String {
    format!("x={:?}, y={:?}", p.x, p.y)
}
