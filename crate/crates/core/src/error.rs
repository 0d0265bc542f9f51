use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{what} is singular at {point:?}")]
    Singular { what: &'static str, point: Vec<f64> },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("config error at line {line}, column {column}: {msg}")]
    ConfigSyntax { line: usize, column: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("missing config section [{0}]")]
    MissingSection(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Error {
        Error::Invalid(msg.into())
    }

    pub fn singular(what: &'static str, point: &[f64]) -> Error {
        Error::Singular {
            what,
            point: point.to_vec(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
