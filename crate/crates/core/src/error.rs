use crate::netsim::PartyId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("{protocol}: verification rejected by {party} in round {round}")]
    TamperDetected {
        protocol: String,
        party: PartyId,
        round: usize,
    },

    #[error("{protocol}: input is singular or too close to zero for reciprocal")]
    SingularInput { protocol: String },

    #[error("{protocol}: local exponential overflowed (share outside representable range)")]
    Range { protocol: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("protocol aborted: {0}")]
    ProtocolAbort(String),

    #[error("format error at row {row}, column {col}: {msg}")]
    Format { row: usize, col: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
