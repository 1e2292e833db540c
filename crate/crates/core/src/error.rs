//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("locus {0} is unexplainable under the current flags (more peaks than the contributors, stutter positions and drop-ins can account for)")]
    LocusUnexplainable(String),

    #[error("likelihood ratio is undefined: Pr(E|Hd) = 0")]
    UndefinedLr,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown version profile '{name}'; known presets: {presets}")]
    UnknownProfile { name: String, presets: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: &str, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
