use std::path::PathBuf;

/// Failure modes of the weight container reader and writer.
///
/// Each variant maps to a stable short code (see [`ContainerError::code`]).
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ContainerError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("truncated payload while reading {context}")]
    Truncated { context: String },
    #[error("duplicate entry name {0:?}")]
    DuplicateName(String),
    #[error("entry {name:?} declares {declared} elements but holds {actual}")]
    LengthMismatch {
        name: String,
        declared: usize,
        actual: usize,
    },
    #[error("entry name is not valid UTF-8")]
    InvalidName,
    #[error("trailing bytes after last entry ({0} bytes)")]
    TrailingBytes(usize),
    #[error("missing entry {0:?}")]
    MissingEntry(String),
}

impl ContainerError {
    pub fn code(&self) -> &'static str {
        match self {
            ContainerError::BadMagic { .. } => "E_BAD_MAGIC",
            ContainerError::Truncated { .. } => "E_TRUNCATED",
            ContainerError::DuplicateName(_) => "E_DUPLICATE_NAME",
            ContainerError::LengthMismatch { .. } => "E_LENGTH_MISMATCH",
            ContainerError::InvalidName => "E_INVALID_NAME",
            ContainerError::TrailingBytes(_) => "E_TRAILING_BYTES",
            ContainerError::MissingEntry(_) => "E_MISSING_ENTRY",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: String,
        expected: String,
        found: String,
    },
    #[error("index {index} out of range for axis of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),
    #[error("weight container: {0}")]
    Container(#[from] ContainerError),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error(
        "estimated activation memory {required} bytes exceeds budget {budget} bytes; \
         use tiled rendering to bound memory"
    )]
    MemoryBudget { required: u64, budget: u64 },
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(what: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Short stable code for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::ShapeMismatch { .. } => "E_SHAPE_MISMATCH",
            Error::IndexOutOfRange { .. } => "E_INDEX_OUT_OF_RANGE",
            Error::InvalidConfig { .. } => "E_INVALID_CONFIG",
            Error::ConfigParse(_) => "E_CONFIG_PARSE",
            Error::Container(e) => e.code(),
            Error::Format(_) => "E_FORMAT",
            Error::UnsupportedFormat(_) => "E_UNSUPPORTED_FORMAT",
            Error::NonFinite(_) => "E_NON_FINITE",
            Error::MemoryBudget { .. } => "E_MEMORY_BUDGET",
            Error::Io { .. } => "E_IO",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
