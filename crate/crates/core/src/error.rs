use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input at a known location. `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// Malformed input without a meaningful line number (binary payloads,
    /// endpoint responses).
    #[error("parse error: {0}")]
    Format(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("duplicate ICD code {0}")]
    DuplicateCode(String),

    #[error("duplicate CUI {0}")]
    DuplicateCui(String),

    #[error("duplicate document id {0}")]
    DuplicateDocument(String),

    #[error("ICD code {0} is outside the supported range A00-N99")]
    OutOfScope(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("unsupported model version: expected {expected}, found {found}")]
    Version { expected: u8, found: u8 },

    #[error("unknown mention {0}")]
    UnknownMention(String),

    #[error("empty scope: {0}")]
    EmptyScope(String),

    #[error("version conflict: expected version {expected}, current version is {current}")]
    Conflict { expected: u64, current: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool: 2 for I/O failures,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Network(_) => 2,
            _ => 1,
        }
    }
}
