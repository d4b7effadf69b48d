use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize: {0}")]
    Normalization(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("memory unit has no members")]
    EmptyUnit,

    #[error("Gram matrix is singular (non-positive pivot {pivot:e} at row {row})")]
    SingularGram { row: usize, pivot: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("degenerate spherical cap: eta = {0} (need -1 <= eta < 1)")]
    DegenerateCap(f64),

    #[error("invalid query model: {0}")]
    Model(String),

    #[error("invalid mode: {0}")]
    Mode(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
