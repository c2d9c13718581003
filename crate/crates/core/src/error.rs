use std::io;

use thiserror::Error;

/// Errors produced anywhere in the simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("deterioration rate {tau} out of range (model covers {tau_max} steps)")]
    TauOutOfRange { tau: usize, tau_max: usize },

    #[error("degenerate Bayesian update: observed outcome has zero evidence")]
    DegenerateUpdate,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("illegal action for agent {agent}: {reason}")]
    IllegalAction { agent: usize, reason: String },

    #[error("episode already finished")]
    EpisodeDone,

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error("model file checksum mismatch")]
    Checksum,

    #[error("malformed model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
