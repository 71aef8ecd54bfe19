//! Descriptor parsing, experiment dispatch and CSV emission behind the `lrad`
//! command.
//!
//! Exit codes: `0` success, `1` numeric failure, `2` missing descriptor,
//! `3` malformed JSON, `4` invalid descriptor, `5` other runtime error,
//! `6` a theory check failed.

mod descriptor;
mod output;
mod runner;
mod theory;

pub use descriptor::{parse_descriptor, parse_descriptor_str, ExperimentDescriptor, ExperimentKind};
pub use output::{fmt_f64, trace_csv, TRACE_HEADER};
pub use runner::{apply_overrides, init_thread_pool, run, Overrides, RunReport};
pub use theory::{theory_checks, CheckResult, TheorySizes};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("descriptor not readable: {0}")]
    MissingFile(String),
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("invalid descriptor: {0}")]
    Invalid(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Runtime(String),
    #[error("theory checks failed: {0}")]
    ChecksFailed(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numeric(_) => 1,
            HarnessError::MissingFile(_) => 2,
            HarnessError::Malformed(_) => 3,
            HarnessError::Invalid(_) => 4,
            HarnessError::Runtime(_) => 5,
            HarnessError::ChecksFailed(_) => 6,
        }
    }
}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::NumericFailure(m) => HarnessError::Numeric(m),
            crate::Error::InvalidArgument(_) | crate::Error::DimensionMismatch { .. } => {
                HarnessError::Invalid(e.to_string())
            }
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}
