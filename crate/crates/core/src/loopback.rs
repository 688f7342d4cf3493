//! In-process transports: clients call the service objects directly, but
//! every message still round-trips through the canonical codec, so loopback
//! runs exercise exactly the bytes the TLS transport would carry.

use std::sync::Arc;

use crate::clock::Clock;
use crate::codec;
use crate::ltca::Ltca;
use crate::model::*;
use crate::pca::Pca;
use crate::transport::*;

fn recode<M: codec::WireMessage>(msg: &M) -> Result<M, TransportError> {
    codec::decode(&codec::encode(msg)).map_err(TransportError::Codec)
}

#[derive(Clone)]
pub struct LoopbackLtca {
    pub ltca: Arc<Ltca>,
    pub clock: Arc<dyn Clock>,
}

impl LtcaChannel for LoopbackLtca {
    fn request_ticket(&self, req: &TicketRequest) -> Result<TicketResponse, TransportError> {
        let req = recode(req)?;
        let res = self
            .ltca
            .issue_ticket(&req, self.clock.now())
            .map_err(|e| TransportError::Server { code: e.wire_code(), detail: e.to_string() })?;
        recode(&res)
    }
}

impl LtcaRevealChannel for LoopbackLtca {
    fn reveal_ticket(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealTicketResponse, TransportError> {
        let res = self
            .ltca
            .reveal_ticket_binding(serial, credential)
            .map_err(|e| TransportError::Server { code: e.wire_code(), detail: e.to_string() })?;
        recode(&res)
    }
}

#[derive(Clone)]
pub struct LoopbackPca {
    pub pca: Arc<Pca>,
    pub clock: Arc<dyn Clock>,
}

impl PcaChannel for LoopbackPca {
    fn fetch_config(&self) -> Result<ConfigResponse, TransportError> {
        recode(&self.pca.get_config())
    }

    fn request_pseudonyms(&self, req: &PsnymRequest) -> Result<PsnymResponse, TransportError> {
        let req = recode(req)?;
        let res = self
            .pca
            .issue_pseudonyms(&req, self.clock.now())
            .map_err(|e| TransportError::Server { code: e.wire_code(), detail: e.to_string() })?;
        recode(&res)
    }
}

impl PcaRevealChannel for LoopbackPca {
    fn reveal_pseudonym(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealPsnymResponse, TransportError> {
        let res = self
            .pca
            .reveal_pseudonym_binding(serial, credential)
            .map_err(|e| TransportError::Server { code: e.wire_code(), detail: e.to_string() })?;
        recode(&res)
    }
}
