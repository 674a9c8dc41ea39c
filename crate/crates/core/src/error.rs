//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("method `{0}` is not explicit")]
    NotExplicit(String),

    #[error("unknown invariant `{0}` on problem `{1}`")]
    UnknownInvariant(String, String),

    #[error("non-finite state encountered in {context}")]
    NonFiniteState { context: &'static str },

    #[error("Newton iteration did not converge in {context}: residual {residual:.3e} after {iterations} iterations (tol {tolerance:.3e})")]
    NewtonDivergence {
        context: &'static str,
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    #[error("no sign change for the relaxation equation after {expansions} bracket expansions (r(lo)={r_lo:.3e}, r(hi)={r_hi:.3e})")]
    BracketFailure {
        expansions: usize,
        r_lo: f64,
        r_hi: f64,
    },

    #[error("root solve stalled: |residual| {residual:.3e} above tolerance {tolerance:.3e}")]
    ToleranceNotMet { residual: f64, tolerance: f64 },

    #[error("relaxation direction is degenerate (stationary step)")]
    DegenerateDirection,

    #[error("relaxation parameter {gamma} outside the accepted range (0, 2)")]
    GammaOutOfRange { gamma: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("problem has no separable canonical (q, p) partition")]
    NotPartitioned,

    #[error("constants data file `{path}` missing or unreadable: {detail}")]
    MissingDataFile { path: String, detail: String },

    #[error("malformed constants data file `{path}`: {detail}")]
    DataFormat { path: String, detail: String },

    #[error("no reference solution available for problem `{0}`")]
    ReferenceUnavailable(String),

    #[error("all samples in the growth-fit window are saturated")]
    SaturatedWindow,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("step {step} at t={time} failed: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("step limit {limit} exceeded before reaching t_end")]
    StepLimitExceeded { limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap a step-level failure with the step index and time it occurred at.
    pub fn at_step(self, step: usize, time: f64) -> Error {
        Error::StepFailed {
            step,
            time,
            source: Box::new(self),
        }
    }

    /// Index of the failing step, if this error carries one.
    pub fn step_index(&self) -> Option<usize> {
        match self {
            Error::StepFailed { step, .. } => Some(*step),
            _ => None,
        }
    }
}
