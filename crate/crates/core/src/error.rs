use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates one of its invariants.
    #[error("{0}")]
    Config(String),
    /// A function was called outside its precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A chain or tree could not be built or routed.
    #[error("topology error: {0}")]
    Topology(String),
    /// A round engine did something it never should, e.g. charged a dead node.
    #[error("protocol logic error: {0}")]
    ProtocolLogic(String),
    #[error("unknown protocol `{0}` (expected deec, sep, hdeec or mhdeec)")]
    UnknownProtocol(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
