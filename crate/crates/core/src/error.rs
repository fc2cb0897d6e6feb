// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("fit failed: {reason} (residual norm {residual_norm:.3e})")]
    Fit { reason: String, residual_norm: f64 },
    #[error("missing pulse for role {0}")]
    MissingRole(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
