use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument (mismatched orders, out-of-range indices, bad brackets).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An enumeration or sample would exceed the requested capacity
    /// or the native integer width.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A series or probability diverges for the given parameters.
    #[error("divergent: {0}")]
    Divergent(String),

    /// The odometer carry escaped the tracked digit window.
    #[error("carry overflow: all {0} tracked digits are at their maximum")]
    CarryOverflow(usize),

    /// A requested integer position falls outside the embedded window.
    #[error("window error: position {0} outside the embedded window")]
    Window(i64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for parameter errors, 3 for
    /// capacity errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 2,
            Error::Capacity(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
