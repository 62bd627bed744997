use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("relation `{relation}`: edge {edge} has endpoint index {index} but node type `{node_type}` has {count} nodes")]
    DanglingEndpoint {
        relation: String,
        edge: usize,
        node_type: String,
        index: usize,
        count: usize,
    },

    #[error("relation `{relation}`: {count} duplicate edge(s) rejected")]
    DuplicateEdges { relation: String, count: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown attribute `{attribute}` on node type `{node_type}`; available: [{available}]")]
    UnknownAttribute {
        node_type: String,
        attribute: String,
        available: String,
    },

    #[error("negative sampling: {0}")]
    Sampling(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("split error: {0}")]
    Split(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("transfer error: {0}")]
    Transfer(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
