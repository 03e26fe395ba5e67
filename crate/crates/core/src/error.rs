// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the segmentation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegError {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Data and hyperparameters (or data and model) do not agree.
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    /// Malformed input that is not a model mismatch.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The brute-force enumerator refuses series longer than its guard.
    #[error("series of length {n} exceeds the enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },
}

impl SegError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Self::ModelMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, SegError>;
