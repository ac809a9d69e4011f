use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: String,
        found: String,
    },

    #[error("cannot compose: generator output dim {generator_dim} != classifier input dim {classifier_dim}")]
    Composition {
        generator_dim: usize,
        classifier_dim: usize,
    },

    #[error("network role mismatch: {0}")]
    Role(String),

    #[error("index {index} out of range for {what} of length {len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model{}: {message}", layer.map(|l| format!(" (layer {l})")).unwrap_or_default())]
    Invariant {
        layer: Option<usize>,
        message: String,
    },

    #[error("unsupported format version {found} (expected 1)")]
    Version { found: i64 },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: f64, limit: u64 },

    #[error("{what}: {source}")]
    In {
        what: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn invariant(layer: Option<usize>, message: impl Into<String>) -> Self {
        Error::Invariant {
            layer,
            message: message.into(),
        }
    }

    pub(crate) fn within(self, what: impl Into<String>) -> Self {
        Error::In {
            what: what.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
