use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A dense local system (mass or moment matrix) could not be inverted.
    #[error("internal error: {0}")]
    Internal(String),

    /// The global system is numerically singular, usually a missing gauge or
    /// an unconstrained trace component.
    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("Oseen iteration did not converge after {iterations} iterations (last difference {last_difference:.3e})")]
    NonConvergence {
        iterations: usize,
        last_difference: f64,
        log: Vec<crate::assembly::IterationRecord>,
    },

    /// The sparse factorization would not fit in the memory available.
    #[error("sparse factorization needs about {:.1} GB but only {:.1} GB is available", *required as f64 / 1e9, *available as f64 / 1e9)]
    InsufficientMemory { required: u64, available: u64 },

    /// Failure on one mesh level of a convergence study.
    #[error("mesh level M={m}: {source}")]
    AtLevel {
        m: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The underlying error with level context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
