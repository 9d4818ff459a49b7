use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Each variant carries enough context to be reported as a machine-readable
/// record by the CLI (see [`Error::kind`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown key `{key}` in {context}{}", suggestion_suffix(.suggestion))]
    UnknownKey {
        key: String,
        context: String,
        suggestion: Option<String>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn suggestion_suffix(s: &Option<String>) -> String {
    match s {
        Some(s) => format!(" (did you mean `{s}`?)"),
        None => String::new(),
    }
}

impl Error {
    pub fn validation(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Validation { .. } => "validation",
            Error::Sampling(_) => "sampling",
            Error::Extrapolation(_) => "extrapolation",
            Error::NumericalInstability(_) => "numerical_instability",
            Error::Singular(_) => "singular",
            Error::Resource(_) => "resource",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::Propagation(_) => "propagation",
            Error::Parse { .. } => "parse",
            Error::UnknownKey { .. } => "unknown_key",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
