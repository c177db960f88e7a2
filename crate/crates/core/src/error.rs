use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition was not met (bad step size, α ≤ β, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed or inconsistent problem description.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The difference recurrence produced a non-finite value.
    #[error("non-finite value produced at step n = {step}")]
    Overflow { step: usize },

    /// The reference integrator produced a non-finite value.
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    /// Root solver failed its residual check.
    #[error("root solver did not converge: residual {residual:e}")]
    NoConvergence { residual: f64 },

    /// Envelope fitting could not produce a decay estimate.
    #[error("fit failed for trial {trial}: {reason}")]
    Fit { trial: usize, reason: String },

    /// An operation was called on a report in the wrong state.
    #[error("invalid state: {0}")]
    State(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
