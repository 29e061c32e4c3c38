use thiserror::Error;

use crate::grid::GridCoord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the domain of an operation (bad coordinate, bad shape, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cell {cell} failed at epoch {epoch}: {source}")]
    Cell {
        cell: GridCoord,
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("audit failure: {0}")]
    Audit(String),

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) => 2,
            Error::Numeric(_) => 3,
            Error::Cell { source, .. } => source.exit_code(),
            Error::Audit(_) => 4,
            _ => 1,
        }
    }
}
