use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("sequence shorter than kernel: length {len}, kernel {kernel}")]
    SequenceShorterThanKernel { len: usize, kernel: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("token index {index} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { index: u32, vocab_size: usize },

    #[error("non-finite loss at sample {0}")]
    NonFiniteLoss(usize),

    #[error("class {class} too small to split: {count} samples")]
    ClassTooSmall { class: String, count: usize },

    #[error("degenerate ROC: class {0} needs both positive and negative samples")]
    DegenerateRoc(usize),

    #[error("no samples")]
    NoSamples,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Checkpoint(#[from] crate::model::CheckpointError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
