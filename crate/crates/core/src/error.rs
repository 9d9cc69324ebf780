use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor or network shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A forward value became NaN or infinite.
    #[error("non-finite value in {op}: {detail}")]
    Numerical { op: String, detail: String },

    /// A node id that is not part of the computation record.
    #[error("unknown node {0} in computation record")]
    UnknownNode(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A CSV cell or file that could not be interpreted.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("run artifact schema version {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },

    #[error("dataset fingerprint mismatch: artifact has {expected}, data has {actual}")]
    Fingerprint { expected: String, actual: String },

    #[error("refusing to overwrite existing file {0}")]
    Exists(PathBuf),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn numerical(op: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numerical {
            op: op.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
