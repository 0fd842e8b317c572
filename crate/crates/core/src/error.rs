use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested tensor-product space is larger than the configured
    /// ceiling. Callers should fall back to the effective single-mode backend.
    #[error("Hilbert-space dimension {dimension} exceeds the ceiling of {ceiling}")]
    DimensionCeilingExceeded { dimension: u128, ceiling: usize },

    #[error("binary entanglement distribution needs a power-of-two cavity count, got {0}")]
    UnsupportedCavityCount(usize),

    #[error("time step {dt:e} s is too large for total rate {rate:e} s^-1 (dt*rate = {product:.3e} >= {limit})")]
    StabilityGuard { dt: f64, rate: f64, product: f64, limit: f64 },

    #[error("population in the top Fock level reached {leakage:.3e} (threshold {threshold:.1e}) at t = {time:e} s")]
    TruncationLeak { leakage: f64, threshold: f64, time: f64 },

    #[error("beamsplitter fidelity {requested} cannot be reached: {reason}")]
    FidelityUnreachable { requested: f64, reason: String },

    #[error("could not write output: {0}")]
    Output(String),

    #[error("time budget {budget_s:e} s does not cover a single scan step ({first_step_s:e} s)")]
    BudgetTooSmall { budget_s: f64, first_step_s: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures raised by the numerical guards (step size, truncation)
    /// as opposed to malformed input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::StabilityGuard { .. } | Error::TruncationLeak { .. } | Error::FidelityUnreachable { .. })
    }
}
