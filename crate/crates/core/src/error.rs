use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid of {nx} points aliases truncation N={truncation} (need at least {needed})")]
    Aliasing {
        nx: usize,
        truncation: usize,
        needed: usize,
    },

    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error(
        "water depth {depth:.3e} at x-index {index} is below the required minimum {h_min:.3e}"
    )]
    DepthViolation {
        depth: f64,
        index: usize,
        h_min: f64,
    },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("{what} did not converge (residual {residual:.3e})")]
    NotConverged { what: String, residual: f64 },

    #[error("frequency fit failed: {0}")]
    FitFailure(String),

    #[error("instability detected at t={time:.4}: norm grew from {initial:.3e} to {current:.3e}")]
    Instability {
        time: f64,
        initial: f64,
        current: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem(_)
                | Error::NotConverged { .. }
                | Error::FitFailure(_)
                | Error::Instability { .. }
                | Error::DepthViolation { .. }
        )
    }
}
