use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("size cap exceeded: {what} = {got} (cap {cap})")]
    CapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn cap(what: &'static str, got: usize, cap: usize) -> Result<()> {
    if got > cap {
        Err(Error::CapExceeded { what, got, cap })
    } else {
        Ok(())
    }
}
