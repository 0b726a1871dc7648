use scholarlib_core::Error as CoreError;

use crate::connector::ConnectorError;

pub type Result<T, E = GatewayError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Domain(#[from] CoreError),
    #[error(transparent)]
    Connector(#[from] ConnectorError),
    #[error("invalid url {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("no active sources for this query")]
    NoActiveSources,
    #[error("an alert run is already in progress")]
    AlertRunInProgress,
    #[error("store corruption: {0}")]
    StoreCorruption(String),
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("corpus parse error: {0}")]
    CorpusParse(String),
}
