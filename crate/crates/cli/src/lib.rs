//! Config-driven experiment runner around the relaxation Runge-Kutta library.
//! Each subcommand runs one of the standard experiments and emits a CSV
//! series plus a JSON metrics summary.

mod experiments;
mod output;
mod spec;

pub use experiments::{run, ExperimentReport};
pub use spec::{
    parse_config, problem_invariants, problem_is_partitioned, resolve, show_defaults, Experiment,
    ExperimentSpec, Overrides, SchemeKind, VALID_PROBLEMS,
};

/// Process exit codes by error class: configuration 2, numerics 3, I/O 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(rrk_core::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Index of the failing integration step, when one is known.
    pub fn failing_step(&self) -> Option<usize> {
        match self {
            CliError::Numeric(e) => e.step_index(),
            _ => None,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rrk_core::Error> for CliError {
    fn from(e: rrk_core::Error) -> Self {
        match e {
            rrk_core::Error::MissingDataFile { .. } | rrk_core::Error::DataFormat { .. } => {
                CliError::Io(e.to_string())
            }
            // a DIRK method passed to an explicit-only experiment is a
            // configuration mistake, not a failed computation
            rrk_core::Error::NotExplicit(_)
            | rrk_core::Error::UnknownMethod(_)
            | rrk_core::Error::UnknownInvariant(..) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}
