use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("element {element}: {reason}")]
    Geometry { element: usize, reason: String },
    #[error("element {element}: moment matrix ill-conditioned (cond = {cond:.3e})")]
    Interpolant { element: usize, cond: f64 },
    #[error("singular system (cond = {cond:.3e}): {context}")]
    Singular { context: String, cond: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: malformed data at byte {offset}: {reason}")]
    Format {
        path: String,
        offset: u64,
        reason: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::Parameter { .. }
                | Error::Format { .. }
                | Error::Io { .. }
                | Error::Json(_)
                | Error::Geometry { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
