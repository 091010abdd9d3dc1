use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller violated a precondition (unnormalized state, size mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// OPO driven at or above oscillation threshold.
    #[error("above threshold: {0}")]
    AboveThreshold(String),

    /// Loss inversion or loss-aware POVMs requested at efficiency ≤ 1/2.
    #[error("efficiency {0} is at or below 0.5; loss correction refused")]
    EfficiencyRefused(f64),

    #[error("heralding event has zero probability")]
    NoHerald,

    /// Leading autocorrelation mode not resolved from the vacuum or from the next mode.
    #[error("ambiguous temporal mode: {0}")]
    AmbiguousMode(String),

    #[error("maximum-likelihood reconstruction did not converge: {0}")]
    NotConverged(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that come from physics preconditions rather than I/O or config.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::AboveThreshold(_) | Error::EfficiencyRefused(_) | Error::NoHerald | Error::AmbiguousMode(_)
        )
    }
}
