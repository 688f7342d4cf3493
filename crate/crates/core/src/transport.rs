//! Client-side channel abstractions. The OBU client and the Resolution
//! Authority speak to services through these traits; implementations are
//! the in-process loopback (tests, simulations) and the TLS transport.

use thiserror::Error;

use crate::codec::CodecError;
use crate::model::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed message: {0}")]
    Codec(CodecError),
    /// The peer answered with a protocol-level error; `code` is the wire
    /// code of the service error, surfaced verbatim.
    #[error("server error {code}: {detail}")]
    Server { code: u16, detail: String },
    #[error("unexpected response type")]
    UnexpectedMessage,
}

/// Vehicle -> LTCA channel (mutually authenticated).
pub trait LtcaChannel {
    fn request_ticket(&self, req: &TicketRequest) -> Result<TicketResponse, TransportError>;
}

/// Vehicle -> PCA channel (server authenticated).
pub trait PcaChannel {
    fn fetch_config(&self) -> Result<ConfigResponse, TransportError>;
    fn request_pseudonyms(&self, req: &PsnymRequest) -> Result<PsnymResponse, TransportError>;
}

/// RA -> LTCA reveal channel.
pub trait LtcaRevealChannel {
    fn reveal_ticket(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealTicketResponse, TransportError>;
}

/// RA -> PCA reveal channel.
pub trait PcaRevealChannel {
    fn reveal_pseudonym(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealPsnymResponse, TransportError>;
}
