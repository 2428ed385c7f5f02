use std::path::PathBuf;

use crate::scene::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed netpbm header: {0}")]
    MalformedHeader(String),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },

    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("invalid mask sample {value} at offset {offset} (expected 0 or 255)")]
    InvalidMaskValue { value: u8, offset: usize },

    #[error("invalid JSON: {0}")]
    Json(String),

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("type mismatch at `{path}`: expected {expected}")]
    TypeMismatch {
        path: String,
        expected: &'static str,
    },

    #[error("invalid scene: {0}")]
    Invalid(ValidationReport),

    #[error("unknown instance id {0}")]
    UnknownInstance(i64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("task mask is empty")]
    EmptyMask,

    #[error("no coded blocks to allocate")]
    NoCodedBlocks,

    #[error("malformed side information: {0}")]
    MalformedSideInfo(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot place {requested} instances without overlap")]
    Infeasible { requested: usize },

    #[error("{image_id}: {source}")]
    Trial {
        image_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the root cause is a filesystem failure rather than bad data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Trial { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
