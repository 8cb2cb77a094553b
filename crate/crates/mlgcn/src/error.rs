use std::path::PathBuf;

/// Errors raised while reading, writing or driving the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed binary content, located by byte offset.
    #[error("{}: byte {offset}: {msg}", path.display())]
    Format { path: PathBuf, offset: u64, msg: String },
    /// Malformed text content, located by 1-based line number.
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    /// Well-formed text that refers to something invalid.
    #[error("{}:{line}: {msg}", path.display())]
    Data { path: PathBuf, line: usize, msg: String },
    #[error("{}: no entries", path.display())]
    Empty { path: PathBuf },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] mlgcn_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
