use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed grid file; `offset` is the byte position the parser rejected.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    /// The grid has no occupied cells, so no anchor can be chosen.
    #[error("no occupied cells to anchor on")]
    NoAnchor,

    /// A batch run failed; wraps the underlying error with the run index.
    #[error("augmentation run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Convenience constructor for [`Error::Format`].
    pub fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
