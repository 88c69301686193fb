use alloc::string::String;

/// Errors raised by graph construction, the numerical solvers and the audits.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate vertex {0}")]
    DuplicateVertex(usize),

    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("graph is disconnected: {reached} of {total} vertices reachable from vertex 0")]
    Disconnected { reached: usize, total: usize },

    #[error("edge {{{0}, {1}}} has nonpositive weight {2}")]
    NonpositiveWeight(usize, usize, f64),

    #[error("vertex {0} has nonpositive measure {1}")]
    NonpositiveMeasure(usize, f64),

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("function has {found} values but the graph has {expected} vertices")]
    DomainMismatch { expected: usize, found: usize },

    #[error("radius {radius} outside 1..={max}")]
    RadiusOutOfRange { radius: usize, max: usize },

    #[error("function is not subharmonic at {count} checked vertices (first: {first})")]
    NotSubharmonic { count: usize, first: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("graph carries no truncation of radius >= 3")]
    RadiusTooSmall,

    #[error("lambda = {lambda} is below the admissible threshold {threshold}")]
    NotAdmissible { lambda: f64, threshold: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("field is not an eigenfunction: residual {residual:e} exceeds {tol:e}")]
    NotAnEigenfunction { residual: f64, tol: f64 },

    #[error("lambda = {0} outside the range required by the bound")]
    LambdaOutOfRange(f64),

    #[error("graph has {0} vertices, above the dense limit {1}")]
    TooLarge(usize, usize),

    #[error("atom lambda = {lambda} below -lambda1 = {threshold}")]
    AdmissibilityViolation { lambda: f64, threshold: f64 },

    #[error("measure weights sum to {0}, expected 1")]
    MeasureNotNormalized(f64),

    #[error("atoms are defined on different domains")]
    MixedDomains,

    #[error("sample outside the evaluation domain: {0}")]
    OutOfDomain(String),

    #[error("nonpositive value {value:e} at vertex {vertex}, t = {t}")]
    NonpositiveSample { vertex: usize, t: f64, value: f64 },

    #[error("tail window has only {0} points")]
    DegenerateWindow(usize),
}

impl Error {
    /// Stable snake_case name of the variant, for tables.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParam(_) => "invalid_param",
            Error::Parse { .. } => "parse",
            Error::DuplicateVertex(_) => "duplicate_vertex",
            Error::DuplicateEdge(..) => "duplicate_edge",
            Error::SelfLoop(_) => "self_loop",
            Error::Disconnected { .. } => "disconnected",
            Error::NonpositiveWeight(..) => "nonpositive_weight",
            Error::NonpositiveMeasure(..) => "nonpositive_measure",
            Error::UnknownVertex(_) => "unknown_vertex",
            Error::DomainMismatch { .. } => "domain_mismatch",
            Error::RadiusOutOfRange { .. } => "radius_out_of_range",
            Error::NotSubharmonic { .. } => "not_subharmonic",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::RadiusTooSmall => "radius_too_small",
            Error::NotAdmissible { .. } => "not_admissible",
            Error::SolveFailure(_) => "solve_failure",
            Error::NotAnEigenfunction { .. } => "not_an_eigenfunction",
            Error::LambdaOutOfRange(_) => "lambda_out_of_range",
            Error::TooLarge(..) => "too_large",
            Error::AdmissibilityViolation { .. } => "admissibility_violation",
            Error::MeasureNotNormalized(_) => "measure_not_normalized",
            Error::MixedDomains => "mixed_domains",
            Error::OutOfDomain(_) => "out_of_domain",
            Error::NonpositiveSample { .. } => "nonpositive_sample",
            Error::DegenerateWindow(_) => "degenerate_window",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
