use thiserror::Error;

#[derive(Debug, Error)]
pub enum SwapError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: String, reason: String },

    #[error("image error at {path}: {reason}")]
    Image { path: String, reason: String },

    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),
}

pub type Result<T> = std::result::Result<T, SwapError>;

impl SwapError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SwapError::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        SwapError::InvalidArgument(msg.into())
    }
}
