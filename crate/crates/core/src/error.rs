use std::path::PathBuf;

use crate::data::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: duplicate id {id:?}", path.display())]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{}:{line}: unknown label {label:?}", path.display())]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        label: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scorer not grounded")]
    NotGrounded,

    #[error("scorer bridge failure: {0}")]
    Bridge(String),

    #[error("no {0} items in the scored set; both classes are required")]
    MissingClass(Label),

    #[error("{0}")]
    InsufficientData(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unsupported artifact format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
