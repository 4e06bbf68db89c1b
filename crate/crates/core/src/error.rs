use thiserror::Error;

use crate::vec3::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {pos:?} lies outside the root cell")]
    OutOfDomain { pos: Vec3 },

    #[error("zero separation between particles {i} and {j} with zero softening")]
    Singularity { i: usize, j: usize },

    #[error("traversal frontier exceeded its capacity of {cap} entries")]
    FrontierExhausted { cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("snapshot format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("barrier: {0}")]
    Barrier(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse error classes, mapped onto process exit codes by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Resource,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Resource => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) => ErrorClass::Usage,
            Error::FrontierExhausted { .. } | Error::Io(_) | Error::Barrier(_) => {
                ErrorClass::Resource
            }
            Error::OutOfDomain { .. }
            | Error::Singularity { .. }
            | Error::Format { .. }
            | Error::Parse { .. }
            | Error::Csv(_) => ErrorClass::Data,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
