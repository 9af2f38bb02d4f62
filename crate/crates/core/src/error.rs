use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed operator: {0}")]
    MalformedOperator(String),
    #[error("invalid spin configuration: {0}")]
    InvalidConfig(String),
    #[error("parameter outside the supported domain: {0}")]
    Domain(String),
    #[error("no measurement assigned to party {party}, setting {setting}")]
    IncompleteAssignment { party: usize, setting: usize },
    #[error("unsupported observable for party {party}, setting {setting}: n_y = {n_y}")]
    UnsupportedObservable {
        party: usize,
        setting: usize,
        n_y: f64,
    },
    #[error("capacity exceeded: {what} ({size} > {limit})")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
