use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context} at line {line}, column {column}: {message}")]
    Parse {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular reduced susceptance matrix: {0}")]
    SingularNetwork(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("degenerate solution: {0}")]
    Degenerate(String),

    #[error("invalid system pattern: {0}")]
    InvalidPattern(String),

    #[error("region is empty or lower-dimensional (chebyshev radius {radius:e})")]
    EmptyRegion { radius: f64 },

    #[error("no feasible seed inside the load box after {attempts} attempts")]
    NoFeasibleSeed { attempts: usize },

    #[error("training data has a single class: {0}")]
    SingleClass(String),

    #[error("feasibility rate too low: {accepted} accepted out of {attempted} draws")]
    LowFeasibility { accepted: usize, attempted: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse_json(context: impl Into<String>, err: &serde_json::Error) -> Self {
        Error::Parse {
            context: context.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
