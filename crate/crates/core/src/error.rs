use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid problem instance: {0}")]
    Instance(String),
    #[error("malformed subset descriptor: {0}")]
    Descriptor(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("scale reported an impossible outcome: {0}")]
    CorruptedOracle(String),
    #[error("decode table contract violated: {0}")]
    Contract(String),
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("channel protocol violated: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
