use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("link unusable: delivery probability is zero")]
    UnusableLink,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("links {0} and {1} share a node")]
    SharedNode(String, String),

    #[error("chain too short: {got} hops, need at least {min}")]
    ChainTooShort { got: usize, min: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("unsupported signature {got}; supported: {supported}")]
    UnsupportedSignature { got: String, supported: String },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
