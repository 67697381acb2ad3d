use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("stale mode caches: built for params revision {cached}, params are at revision {current}")]
    StaleCache { cached: u64, current: u64 },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },

    #[error("{file}: unsupported format version {found} (expected {expected})")]
    Version {
        file: String,
        found: String,
        expected: String,
    },

    #[error("{file}: checksum mismatch (file is truncated or corrupted)")]
    Checksum { file: String },

    #[error("dense tensor with {requested} entries exceeds the oracle size bound of {bound}")]
    SizeBound { requested: usize, bound: usize },

    #[error("non-finite gradient entry in {group}")]
    NonFiniteGradient { group: String },

    #[error("training diverged at epoch {epoch} (last finite epoch: {})", last_finite_epoch.map_or_else(|| "none".to_string(), |e| e.to_string()))]
    Diverged {
        epoch: usize,
        last_finite_epoch: Option<usize>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical procedure itself rather than of its inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFiniteGradient { .. } | Error::Diverged { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
