//! Crate-wide error type.

use crate::poisson::State;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The state left the guarded domain. Carries the last guard-valid
    /// state and its time.
    #[error("guard violation at t = {t}: last valid state at t = {last_time}")]
    GuardViolation {
        t: f64,
        last_time: f64,
        last_state: State,
    },

    #[error("control value outside the bound box (component {index})")]
    ControlOutOfBounds { index: usize },

    #[error("time {t} outside the signal span [{start}, {end})")]
    SignalOutOfSpan { t: f64, start: f64, end: f64 },

    #[error("invalid control signal: {0}")]
    InvalidSignal(String),

    #[error("step limit exceeded at t = {t} ({max_steps} steps)")]
    StepLimitExceeded { t: f64, max_steps: usize },

    #[error("step size underflow at t = {t} (stiffness or singularity approach)")]
    StepUnderflow { t: f64 },

    #[error("sampler exhausted after {tries} tries without a guard-valid state")]
    SamplerExhausted { tries: usize },

    #[error("steering failed after {nodes_expanded} expansions (best error {best_error})")]
    SteerFailed { best_error: f64, nodes_expanded: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
