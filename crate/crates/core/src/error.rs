use thiserror::Error;

/// Errors raised by the flux, data, solver and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("r = {r} lies beyond the tabulated range [0, {r_max}]")]
    Extrapolation { r: f64, r_max: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Inconsistent or incomplete configuration (grid too small, bad keys, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("computational domain too small: {0}")]
    DomainTooSmall(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The discrete solution left the admissible set (NaN or negative undershoot).
    #[error("instability at step {step} (t = {t:.6e}): {detail}")]
    Instability { step: usize, t: f64, detail: String },

    /// Picard iteration failed to contract on a Duhamel block.
    #[error(
        "Picard iteration did not contract on block [{t0:.6e}, {t1:.6e}] after {iterations} \
         iterations (residual {residual:.3e}); reduce the block length"
    )]
    NonContraction { t0: f64, t1: f64, iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
