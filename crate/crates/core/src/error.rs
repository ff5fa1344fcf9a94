use alloc::string::String;
use thiserror::Error;

/// Invalid design or scenario configuration. `field` is the JSON key path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration at `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("interim estimate undefined: no events and zero effective non-events")]
    Undefined,
    #[error("negative follow-up time {0}")]
    NegativeFollowUp(f64),
    #[error("assessment window must be positive, got {0}")]
    BadWindow(f64),
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("Beta shape parameters must be positive, got ({0}, {1})")]
    BadShape(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsotonicError {
    #[error("values and weights differ in length ({values} vs {weights})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("weights must be non-negative with at least one positive entry")]
    NoPositiveWeight,
    #[error("mode {mode} out of range for {len} doses")]
    BadMode { mode: usize, len: usize },
}
