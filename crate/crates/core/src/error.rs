use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension d = {0} is unsupported: l = d/(d-2) must be an integer, which holds only for d = 3 and d = 4")]
    UnsupportedDimension(u32),

    #[error("polynomial degree {degree} exceeds the eigenbasis cap {cap}; rebuild the eigen system with a larger cap")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("root finder did not converge after {iterations} iterations (xi = {xi}, residual = {residual:e})")]
    Convergence {
        iterations: usize,
        xi: f64,
        residual: f64,
    },

    #[error("non-finite field value at node {node} (y = {y})")]
    StateCorruption { node: usize, y: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain coverage insufficient: {0}")]
    Coverage(String),

    #[error("cannot fit: {0}")]
    Unfit(String),

    #[error("probe at d = {dvec:?} failed: {source}")]
    Probe { dvec: Vec<f64>, source: Box<Error> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
