use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Each variant belongs to one of three classes (validation, numeric,
/// capacity) which the command-line front end maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e}")]
    QuadratureNonconvergence { estimate: f64, error_estimate: f64 },

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("capacity guard exceeded: {what} ({requested:e} > limit {limit:e})")]
    Capacity {
        what: &'static str,
        requested: f64,
        limit: f64,
    },

    #[error("tail fit failed: fewer than {min_points} points left before reaching R^2 target (best R^2 {best_r2:.6})")]
    FitFailure { min_points: usize, best_r2: f64 },

    #[error("histogram has no pairs with a common connection")]
    EmptyHistogram,

    #[error("{failed} of {total} replications failed, above the 10% abort threshold")]
    TooManyFailures { failed: usize, total: usize },

    #[error("{0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Capacity,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Io(_) | Error::Json(_) => ErrorClass::Validation,
            Error::Capacity { .. } => ErrorClass::Capacity,
            Error::QuadratureNonconvergence { .. }
            | Error::RootNotBracketed(_)
            | Error::FitFailure { .. }
            | Error::EmptyHistogram
            | Error::TooManyFailures { .. }
            | Error::Numeric(_) => ErrorClass::Numeric,
        }
    }

    /// 2 for configuration/validation, 3 for numeric failures, 4 for capacity guards.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Numeric => 3,
            ErrorClass::Capacity => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
