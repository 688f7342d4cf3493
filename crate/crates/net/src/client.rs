//! Blocking TLS clients. Acquisition channels open a fresh connection per
//! request, so TCP and TLS setup are part of the measured end-to-end
//! latency; `TlsSession` keeps one connection open for bulk provisioning.

use std::io;
use std::net::TcpStream;
use std::sync::Arc;

use rustls::pki_types::ServerName;
use rustls::{ClientConfig, ClientConnection, StreamOwned};
use vpki_core::codec::{self, AnyMessage, WireMessage};
use vpki_core::model::*;
use vpki_core::transport::*;

use crate::frame::{read_frame, write_frame};

/// Where and how to reach one service.
#[derive(Clone)]
pub struct Endpoint {
    pub addr: String,
    pub server_name: String,
    pub tls: Arc<ClientConfig>,
}

impl Endpoint {
    pub fn new(addr: impl Into<String>, server_name: impl Into<String>, tls: Arc<ClientConfig>) -> Self {
        Endpoint { addr: addr.into(), server_name: server_name.into(), tls }
    }

    fn connect(&self) -> Result<StreamOwned<ClientConnection, TcpStream>, TransportError> {
        let io_err = |e: io::Error| TransportError::Io(e.to_string());
        let name = ServerName::try_from(self.server_name.clone())
            .map_err(|e| TransportError::Io(format!("bad server name: {e}")))?;
        let conn = ClientConnection::new(self.tls.clone(), name)
            .map_err(|e| TransportError::Io(format!("TLS setup: {e}")))?;
        let tcp = TcpStream::connect(&self.addr).map_err(io_err)?;
        tcp.set_nodelay(true).map_err(io_err)?;
        Ok(StreamOwned::new(conn, tcp))
    }

    /// One request/response exchange over a fresh connection.
    fn roundtrip(&self, request: &[u8]) -> Result<AnyMessage, TransportError> {
        let mut session = TlsSession { stream: self.connect()? };
        session.roundtrip(request)
    }
}

/// A persistent connection carrying multiple exchanges.
pub struct TlsSession {
    stream: StreamOwned<ClientConnection, TcpStream>,
}

impl TlsSession {
    pub fn open(endpoint: &Endpoint) -> Result<Self, TransportError> {
        Ok(TlsSession { stream: endpoint.connect()? })
    }

    pub fn roundtrip(&mut self, request: &[u8]) -> Result<AnyMessage, TransportError> {
        let io_err = |e: io::Error| TransportError::Io(e.to_string());
        write_frame(&mut self.stream, request).map_err(io_err)?;
        let frame = read_frame(&mut self.stream).map_err(io_err)?;
        codec::decode_any(&frame).map_err(TransportError::Codec)
    }
}

fn expect<M>(msg: AnyMessage, extract: impl FnOnce(AnyMessage) -> Option<M>) -> Result<M, TransportError>
where
    M: WireMessage,
{
    match msg {
        AnyMessage::Error(e) => Err(TransportError::Server { code: e.code, detail: e.detail }),
        other => extract(other).ok_or(TransportError::UnexpectedMessage),
    }
}

/// Vehicle-side LTCA channel over mutually authenticated TLS.
#[derive(Clone)]
pub struct TlsLtcaChannel {
    pub endpoint: Endpoint,
}

impl LtcaChannel for TlsLtcaChannel {
    fn request_ticket(&self, req: &TicketRequest) -> Result<TicketResponse, TransportError> {
        let msg = self.endpoint.roundtrip(&codec::encode(req))?;
        expect(msg, |m| match m {
            AnyMessage::TicketResponse(res) => Some(res),
            _ => None,
        })
    }
}

impl LtcaRevealChannel for TlsLtcaChannel {
    fn reveal_ticket(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealTicketResponse, TransportError> {
        let req = RevealTicketRequest { serial, credential: *credential };
        let msg = self.endpoint.roundtrip(&codec::encode(&req))?;
        expect(msg, |m| match m {
            AnyMessage::RevealTicketResponse(res) => Some(res),
            _ => None,
        })
    }
}

/// Vehicle-side PCA channel over server-authenticated TLS.
#[derive(Clone)]
pub struct TlsPcaChannel {
    pub endpoint: Endpoint,
}

impl PcaChannel for TlsPcaChannel {
    fn fetch_config(&self) -> Result<ConfigResponse, TransportError> {
        let msg = self.endpoint.roundtrip(&codec::encode(&ConfigRequest {}))?;
        expect(msg, |m| match m {
            AnyMessage::ConfigResponse(res) => Some(res),
            _ => None,
        })
    }

    fn request_pseudonyms(&self, req: &PsnymRequest) -> Result<PsnymResponse, TransportError> {
        let msg = self.endpoint.roundtrip(&codec::encode(req))?;
        expect(msg, |m| match m {
            AnyMessage::PsnymResponse(res) => Some(res),
            _ => None,
        })
    }
}

impl PcaRevealChannel for TlsPcaChannel {
    fn reveal_pseudonym(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealPsnymResponse, TransportError> {
        let req = RevealPsnymRequest { serial, credential: *credential };
        let msg = self.endpoint.roundtrip(&codec::encode(&req))?;
        expect(msg, |m| match m {
            AnyMessage::RevealPsnymResponse(res) => Some(res),
            _ => None,
        })
    }
}

/// Register a fleet of vehicles over one persistent mTLS session.
pub fn register_vehicles(
    endpoint: &Endpoint,
    vehicles: &[(SubjectId, vpki_core::crypto::PublicKey)],
) -> Result<Vec<LongTermCertificate>, TransportError> {
    let mut session = TlsSession::open(endpoint)?;
    let mut ltcs = Vec::with_capacity(vehicles.len());
    for (subject_id, public_key) in vehicles {
        let req = RegisterRequest { subject_id: *subject_id, public_key: public_key.clone() };
        let msg = session.roundtrip(&codec::encode(&req))?;
        let res = expect(msg, |m| match m {
            AnyMessage::RegisterResponse(res) => Some(res),
            _ => None,
        })?;
        ltcs.push(res.ltc);
    }
    Ok(ltcs)
}
