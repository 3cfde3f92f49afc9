use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("codec: {0}")]
    Codec(#[from] crate::codec::CodecError),
    #[error("transport: {0}")]
    Transport(#[from] crate::transport::TransportError),
    #[error("collective: {0}")]
    Collective(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
