use thiserror::Error;

use crate::orbit::Orbit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not continue; the orbit computed so far is attached.
    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        reason: String,
        partial: Box<Orbit>,
    },

    #[error("orbit too short: found {found} v_t zeros, need at least 3")]
    InsufficientSpan { found: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("profile is not a solution: max residual {residual:.3e} exceeds gate {gate:.3e}")]
    NotASolution { residual: f64, gate: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Relaxation or search stopped before reaching its target.
    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::InsufficientData(_)
            | Error::NotASolution { .. }
            | Error::Precondition(_)
            | Error::Config(_)
            | Error::Parse(_) => 1,
            Error::IntegrationFailure { .. }
            | Error::InsufficientSpan { .. }
            | Error::NotConverged(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        }
    }
}
