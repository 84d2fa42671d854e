//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by tensor construction, loss evaluation, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid tensor shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: String },

    #[error("tensor data length {got} does not match shape {dims:?} (expected {expected})")]
    DataLength {
        dims: Vec<usize>,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value at flat index {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    #[error("{context}: {reason}")]
    InvalidArgument {
        context: &'static str,
        reason: String,
    },

    #[error("zero-variance embedding: centered matrix has no variation ({side})")]
    DegenerateEmbedding { side: &'static str },

    #[error("no attention mass on audio tokens")]
    ZeroAttentionMass,

    #[error("label {label} out of range for vocabulary of size {vocab}")]
    LabelOutOfRange { label: usize, vocab: usize },

    #[error("non-finite loss component `{component}` (value {value})")]
    NonFiniteLoss { component: &'static str, value: f64 },

    #[error("loss became non-finite at step {step}: ce={ce} dp={dp} da={da} dr={dr}")]
    NanLoss {
        step: usize,
        ce: f64,
        dp: f64,
        da: f64,
        dr: f64,
    },

    #[error(
        "teacher failed to reach test UA {threshold} within {steps} steps (best {best:.4}); \
         lower the generator noise, raise pretrain steps, or relax pretrain.ua_threshold"
    )]
    TeacherNotConverged {
        threshold: f64,
        steps: usize,
        best: f64,
    },

    #[error("tensor file: bad magic {got:?} (expected \"TNS1\")")]
    BadMagic { got: [u8; 4] },

    #[error("tensor file: unsupported version {0} (expected 1)")]
    UnsupportedVersion(u8),

    #[error("tensor file: unsupported dtype tag {0} (expected 0 = f32 or 1 = f64)")]
    UnsupportedDtype(u8),

    #[error("tensor file: truncated ({context}: need {need} bytes, have {have})")]
    Truncated {
        context: &'static str,
        need: usize,
        have: usize,
    },

    #[error("tensor file: trailing garbage ({0} unexpected bytes after payload)")]
    TrailingBytes(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
