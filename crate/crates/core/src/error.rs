use thiserror::Error;

/// Errors raised by model construction, integration and the analyses built on top.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("negative density w = {0} (state space is [0, inf))")]
    NegativeDensity(f64),

    #[error("derivative order {0} not supported (expected 1, 2 or 3)")]
    InvalidOrder(u8),

    #[error("backward integration escaped at t = {t} (w exceeded guard or step underflow)")]
    BackwardBlowup { t: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    ToleranceFailure { t: f64, reason: String },

    #[error("w0 = {w0} lies outside the range of the Poincare map")]
    OutOfRange { w0: f64 },

    #[error("found {count} fixed points, more than the admissible three: {roots:?}")]
    SuspectCount { count: usize, roots: Vec<f64> },

    #[error("iteration did not converge after {iterations} periods (last iterate {last})")]
    NotConverged { last: f64, iterations: usize },

    #[error("operation not available for variant {0}")]
    UnsupportedVariant(String),

    #[error("inconsistent classification: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
