// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A state would hold more photons than its configured capacity.
    #[error("photon capacity exceeded: {requested} photons requested, n_max = {n_max}")]
    Capacity { requested: usize, n_max: usize },

    /// A numeric parameter is out of its allowed range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A circuit references a path that no earlier stage provides.
    #[error("unknown path `{path}` referenced by circuit step {index}")]
    UnknownPath { index: usize, path: String },

    /// Detector or circuit configuration is inconsistent.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Measurement data is missing, empty, or degenerate.
    #[error("data error: {0}")]
    Data(String),

    /// Maximum-likelihood search failed to converge; the best iterate is kept.
    #[error("tomography did not converge after {restarts} restarts (best log-likelihood {best_log_likelihood})")]
    NonConvergence {
        restarts: usize,
        best_log_likelihood: f64,
        best: Box<crate::tomography::MleOutcome>,
    },

    /// A JSON/CSV document does not match the expected schema.
    #[error("schema error at {location}: {reason}")]
    Schema { location: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
