//! Error types shared across the crate.
//!
//! Recoverable problems (bad configuration, malformed checkpoint files)
//! are reported through `Result`. Violations of documented call
//! contracts (out-of-range action indices, shape mismatches) panic.

use std::fmt;

/// A configuration value failed validation. Carries the offending field
/// name so callers can point the user at the exact key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Failure while reading or writing a network checkpoint.
#[derive(Debug)]
pub enum CheckpointError {
    Io(std::io::Error),
    /// The file exists but is not a checkpoint this version understands.
    Format(String),
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::Io(e) => write!(f, "checkpoint I/O error: {e}"),
            CheckpointError::Format(m) => write!(f, "bad checkpoint: {m}"),
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<std::io::Error> for CheckpointError {
    fn from(e: std::io::Error) -> Self {
        CheckpointError::Io(e)
    }
}
