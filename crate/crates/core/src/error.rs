//! Shared error type for the pipeline crates.

use thiserror::Error;

/// Errors surfaced by pipeline operations.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("bit string length mismatch: {left} vs {right} bits ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid probability {value} ({context})")]
    InvalidProbability { value: f64, context: String },

    #[error("probabilities sum to {sum}, expected 1 within {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "seed exhausted: consumed {consumed} of {available} bits, \
         needed roughly {estimated_budget} for the whole run ({context})"
    )]
    SeedExhausted {
        consumed: usize,
        available: usize,
        estimated_budget: usize,
        context: String,
    },

    #[error("weak design seed length {d} exceeds the resource cap {cap}")]
    DesignTooLarge { d: usize, cap: usize },

    #[error("weak design construction failed: {0}")]
    DesignConstruction(String),

    #[error("device already retired (devices are single-run per protocol)")]
    DeviceConsumed,

    #[error("scripted device has no entry for round {round}")]
    ScriptExhausted { round: u64 },

    #[error("infeasible schedule at step {step}: {reason}")]
    InfeasibleSchedule { step: usize, reason: String },

    #[error("device factory exhausted after {produced} devices")]
    DeviceFactoryExhausted { produced: usize },

    #[error("transcript ordering violation: {0}")]
    OrderingViolation(String),

    #[error("bell test inconclusive: {0}")]
    InconclusiveBellTest(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
