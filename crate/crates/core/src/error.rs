use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("residue {value} out of range for p = {p}")]
    ResidueOutOfRange { value: u64, p: u32 },

    #[error("codeword has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("adjacency is only defined for distinct codewords")]
    SelfAdjacency,

    #[error("instance too large: {what} = {size} exceeds limit {limit}")]
    InstanceTooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn too_large(what: &'static str, size: u128, limit: u128) -> Self {
        Error::InstanceTooLarge { what, size, limit }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
