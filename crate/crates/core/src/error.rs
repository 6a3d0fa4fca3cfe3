use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} sites, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{what}: {size} exceeds the capacity limit {cap}")]
    Capacity {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure in {stage} at step {step}: {reason}")]
    Numerical {
        stage: String,
        step: usize,
        reason: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Prefix a numerical failure with the stroke that produced it.
    pub(crate) fn in_stroke(self, label: &str) -> Self {
        match self {
            Error::Numerical {
                stage,
                step,
                reason,
            } => Error::Numerical {
                stage: format!("{label}/{stage}"),
                step,
                reason,
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
