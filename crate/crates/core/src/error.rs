use thiserror::Error;

use crate::markov::ChainViolation;
use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Markov chain:\n{}", join_lines(.0))]
    InvalidChain(Vec<ChainViolation>),

    #[error("invalid network spec:\n{}", join_lines(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("shape mismatch: {what} has length {got}, expected {expected}")]
    Shape {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("index {index} out of range for {what} (size {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular linear system (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("slackness certificate rejected at queue {queue}: achieved slack {achieved} < claimed eta {claimed}")]
    SlacknessViolated {
        queue: usize,
        achieved: f64,
        claimed: f64,
    },

    #[error("invalid slackness certificate: {0}")]
    InvalidCertificate(String),

    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),

    #[error("linear program is unbounded (entering column {0})")]
    Unbounded(usize),

    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),

    #[error("dual ascent did not converge: best g = {best}, gap estimate {gap:e}")]
    DualNotConverged { best: f64, gap: f64 },

    #[error("trace does not match spec: {0}")]
    TraceMismatch(String),

    #[error("reference state visited {visits} time(s); at least 2 visits are needed")]
    TooFewVisits { visits: usize },

    #[error("time average over zero slots")]
    EmptyAverage,

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_lines<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
