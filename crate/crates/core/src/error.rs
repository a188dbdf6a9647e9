use thiserror::Error;

use crate::market::Diagnostic;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("problem dimension {dim} exceeds the brute-force limit of {limit}")]
    SizeLimit { dim: usize, limit: usize },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("invalid elasticity {0}: must be strictly negative")]
    InvalidElasticity(f64),

    #[error("model failed validation: {}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),

    #[error("internal assembly error: {0}")]
    Assembly(String),

    #[error("equilibrium solve failed: {0}")]
    Solver(String),

    #[error("invalid comparison: {0}")]
    Comparison(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown fields: {}", .0.join(", "))]
    UnknownFields(Vec<String>),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
