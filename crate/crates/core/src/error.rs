use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("accuracy target missed: {what} (achieved {achieved:.3e})")]
    Accuracy { what: String, achieved: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("inconsistent recursion at order {order}: solvability defect {defect:.3e}")]
    InconsistentRecursion { order: usize, defect: f64 },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("degenerate geometry: {0}")]
    Degeneracy(String),
    #[error("contradiction: {0}")]
    Contradiction(String),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

impl Error {
    /// Prefix the message with the stage that produced it.
    pub fn at_stage(self, stage: &str) -> Error {
        match self {
            Error::Numerical(m) => Error::Numerical(format!("[{stage}] {m}")),
            Error::Configuration(m) => Error::Configuration(format!("[{stage}] {m}")),
            Error::Domain(m) => Error::Domain(format!("[{stage}] {m}")),
            Error::Capability(m) => Error::Capability(format!("[{stage}] {m}")),
            other => other,
        }
    }

    /// True for errors caused by the caller's configuration rather than by numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Configuration(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
