use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum SsmError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unsupported system: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("outer resonance at order {order}: monomial {monomial:?} with outer eigenvalue {lambda} (gap {gap:.3e})")]
    OuterResonance {
        order: usize,
        monomial: Vec<usize>,
        lambda: String,
        gap: f64,
    },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SsmError>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(SsmError::Validation(msg.into()))
}
