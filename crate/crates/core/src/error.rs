use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for a space of {size} points")]
    Index { index: usize, size: usize },
    #[error("representation error: {0}")]
    Representation(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("point {0} lies in the unrealized tail; raise k_max")]
    OutOfRealization(f64),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Config error with a line and column. Errors raised inside tagged enums
/// come back from serde_json without a position; those are located by
/// searching for the offending key.
pub fn config_error(what: &str, text: &str, e: &serde_json::Error) -> Error {
    let msg = e.to_string();
    if e.line() > 0 {
        return Error::Config(format!("{what}: {msg}"));
    }
    let key = msg.split('`').nth(1).map(|k| format!("\"{k}\""));
    let pos = key.as_deref().and_then(|k| text.find(k));
    match pos {
        Some(p) => {
            let before = &text[..p];
            let line = before.matches('\n').count() + 1;
            let column = p - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Error::Config(format!("{what}: {msg} at line {line} column {column}"))
        }
        None => Error::Config(format!("{what}: {msg}")),
    }
}
