use thiserror::Error;

/// Errors raised by the special-function kernel, the orbit solver and the
/// tau-function routes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("seed point too small: boundary value {value:.3e} at t = {t_seed} exceeds 1e-5, use a larger t_seed")]
    SeedTooSmall { t_seed: f64, value: f64 },

    #[error("step size underflow at t = {t:.6e}")]
    StepUnderflow { t: f64 },

    #[error("non-finite state (overflow) at t = {t:.6e}")]
    Overflow { t: f64 },

    #[error("maximum number of steps ({steps}) exceeded at t = {t:.6e}")]
    MaxSteps { steps: usize, t: f64 },

    #[error("t = {t} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{quantity} diverges: {detail}")]
    Divergent {
        quantity: &'static str,
        detail: String,
    },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
