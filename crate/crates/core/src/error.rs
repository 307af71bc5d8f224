use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel `{kernel}` expects {expected} arguments, got {got}")]
    Arity {
        kernel: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("centered kernel evaluated before its center was set")]
    CenterUnset,
    #[error("integer overflow computing {0}")]
    Overflow(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("index space has a single subset; covariance between distinct subsets is undefined")]
    DegenerateSpace,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no oracle available: {0}")]
    UnsupportedOracle(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
