//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by signal generation, rendering, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of two operands disagree (image vs image, gradient vs batch, ...).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A class index or coordinate is outside its valid range.
    #[error("index out of range: {0}")]
    Index(String),

    /// An input value is outside the operation's domain (empty batch, bad range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A rectangle or region does not fit inside its container.
    #[error("bounds error: {0}")]
    Bounds(String),

    /// A documented precondition of the operation was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A file or byte stream does not match its declared format.
    #[error("format error: {0}")]
    Format(String),

    /// Mesh data violates a geometric invariant (bad index, degenerate face).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// An experiment configuration is invalid; the message names the field path.
    #[error("config error: {0}")]
    Config(String),

    /// A configured resource cap would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach context (typically an item or iteration index) to an error
    /// propagating out of a per-item loop.
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            Error::Dimension(m) => Error::Dimension(format!("{ctx}: {m}")),
            Error::Index(m) => Error::Index(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Bounds(m) => Error::Bounds(format!("{ctx}: {m}")),
            Error::Precondition(m) => Error::Precondition(format!("{ctx}: {m}")),
            Error::Format(m) => Error::Format(format!("{ctx}: {m}")),
            Error::Geometry(m) => Error::Geometry(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Resource(m) => Error::Resource(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Format(format!("{ctx}: i/o error: {e}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
