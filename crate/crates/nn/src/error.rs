use thiserror::Error;

/// Errors raised by tensor operations, layers and the parameter store.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },
    #[error("batchnorm in train mode needs a batch of at least 2, got {0}")]
    BatchTooSmall(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("backward needs a scalar output, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("parameter store is borrowed read-only by this session")]
    ReadOnlyStore,
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> NnError {
    NnError::InvalidArgument { op, msg: msg.into() }
}
