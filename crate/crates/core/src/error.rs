use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("size guard exceeded: {0}")]
    Guard(String),

    #[error("fixed point did not converge at p = {p} (residual {residual:e} after {iterations} iterations)")]
    NonConvergence { p: f64, residual: f64, iterations: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty color space: no nonwhite type is reachable from the root")]
    EmptyColorSpace,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
