use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected \"EMB1\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("truncated header")]
    TruncatedHeader,

    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(u64),

    #[error("invalid metadata: {0}")]
    Metadata(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("zero row at index {0}")]
    ZeroRow(usize),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("row count mismatch ({found}\u{2260}{expected})")]
    RowCountMismatch { expected: usize, found: usize },

    #[error("dimension mismatch ({found}\u{2260}{expected})")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k out of range: k={k}, n={n} (need 1 <= k <= n-1)")]
    KOutOfRange { k: usize, n: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("zero variance")]
    ZeroVariance,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// `true` for failures of the underlying file system rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
