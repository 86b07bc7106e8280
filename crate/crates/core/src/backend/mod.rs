//! The decision boundary: everything a vision-language model would decide
//! (candidate filtering, scoring, stop checks, memory extraction) goes
//! through [`DecisionBackend`].

pub mod oracle;
pub mod remote;
pub mod stub;
pub mod wire;

use thiserror::Error;

pub use oracle::{OracleBackend, OracleConfig};
pub use remote::{BackendConfig, RemoteBackend};
pub use stub::{ScriptEntry, StubScript, StubServer};
pub use wire::{
    validate_response, DecisionRequest, DecisionResponse, MemoryOp, RequestKind, WireCandidate,
    WireObservation, WirePose, WireRay, WireScore, PROTOCOL_VERSION,
};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("could not bind stub server: {0}")]
    BindFailure(String),
}

pub trait DecisionBackend: Send + Sync {
    fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse, BackendError>;
}

impl<T: DecisionBackend + ?Sized> DecisionBackend for &T {
    fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse, BackendError> {
        (**self).decide(req)
    }
}

impl<T: DecisionBackend + ?Sized> DecisionBackend for Box<T> {
    fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse, BackendError> {
        (**self).decide(req)
    }
}
