//! Tokio TLS servers for the LTCA and PCA. Each connection is one task
//! reading length-prefixed codec frames until EOF; each frame gets exactly
//! one response frame (a typed message or an `ErrorResponse`).

use std::net::SocketAddr;
use std::sync::Arc;

use log::{debug, warn};
use tokio::io::{AsyncRead, AsyncWrite};
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio_rustls::TlsAcceptor;
use vpki_core::clock::Clock;
use vpki_core::codec::{self, AnyMessage};
use vpki_core::ltca::Ltca;
use vpki_core::model::ErrorResponse;
use vpki_core::pca::Pca;

use crate::frame::{read_frame_async, write_frame_async};
use crate::tls::TlsError;

/// Wire code for a request the server could not decode.
pub const CODE_MALFORMED: u16 = 1;
/// Wire code for a message type the endpoint does not serve.
pub const CODE_UNSUPPORTED: u16 = 2;

/// One service endpoint behind TLS: maps a decoded message to an encoded
/// response.
pub trait Dispatcher: Send + Sync + 'static {
    fn dispatch(&self, msg: AnyMessage) -> Vec<u8>;
}

fn error_frame(code: u16, detail: String) -> Vec<u8> {
    codec::encode(&ErrorResponse { code, detail })
}

/// The LTCA endpoint: registration, ticket issuance, ticket-binding
/// reveals. Sits behind mutually authenticated TLS.
pub struct LtcaDispatcher {
    pub ltca: Arc<Ltca>,
    pub clock: Arc<dyn Clock>,
}

impl Dispatcher for LtcaDispatcher {
    fn dispatch(&self, msg: AnyMessage) -> Vec<u8> {
        match msg {
            AnyMessage::TicketRequest(req) => {
                match self.ltca.issue_ticket(&req, self.clock.now()) {
                    Ok(res) => codec::encode(&res),
                    Err(e) => error_frame(e.wire_code(), e.to_string()),
                }
            }
            AnyMessage::RegisterRequest(req) => {
                match self.ltca.register_vehicle(req.subject_id, req.public_key, self.clock.now())
                {
                    Ok(ltc) => codec::encode(&vpki_core::model::RegisterResponse { ltc }),
                    Err(e) => error_frame(e.wire_code(), e.to_string()),
                }
            }
            AnyMessage::RevealTicketRequest(req) => {
                match self.ltca.reveal_ticket_binding(req.serial, &req.credential) {
                    Ok(res) => codec::encode(&res),
                    Err(e) => error_frame(e.wire_code(), e.to_string()),
                }
            }
            other => error_frame(CODE_UNSUPPORTED, format!("unsupported message: {other:?}")),
        }
    }
}

/// The PCA endpoint: configuration discovery, pseudonym issuance,
/// pseudonym-binding reveals. Server-authenticated TLS only.
pub struct PcaDispatcher {
    pub pca: Arc<Pca>,
    pub clock: Arc<dyn Clock>,
}

impl Dispatcher for PcaDispatcher {
    fn dispatch(&self, msg: AnyMessage) -> Vec<u8> {
        match msg {
            AnyMessage::ConfigRequest(_) => codec::encode(&self.pca.get_config()),
            AnyMessage::PsnymRequest(req) => {
                match self.pca.issue_pseudonyms(&req, self.clock.now()) {
                    Ok(res) => codec::encode(&res),
                    Err(e) => error_frame(e.wire_code(), e.to_string()),
                }
            }
            AnyMessage::RevealPsnymRequest(req) => {
                match self.pca.reveal_pseudonym_binding(req.serial, &req.credential) {
                    Ok(res) => codec::encode(&res),
                    Err(e) => error_frame(e.wire_code(), e.to_string()),
                }
            }
            other => error_frame(CODE_UNSUPPORTED, format!("unsupported message: {other:?}")),
        }
    }
}

async fn serve_connection<S>(stream: S, dispatcher: Arc<dyn Dispatcher>) -> std::io::Result<()>
where
    S: AsyncRead + AsyncWrite + Unpin,
{
    let (mut reader, mut writer) = tokio::io::split(stream);
    while let Some(frame) = read_frame_async(&mut reader).await? {
        let response = match codec::decode_any(&frame) {
            Ok(msg) => dispatcher.dispatch(msg),
            Err(e) => error_frame(CODE_MALFORMED, e.to_string()),
        };
        write_frame_async(&mut writer, &response).await?;
    }
    Ok(())
}

/// A running TLS server; dropping the handle does not stop it, call
/// `shutdown`.
pub struct ServerHandle {
    pub local_addr: SocketAddr,
    stop: watch::Sender<bool>,
}

impl ServerHandle {
    pub fn shutdown(&self) {
        let _ = self.stop.send(true);
    }
}

/// Bind and serve. Runs inside an existing tokio runtime.
pub async fn spawn_server(
    bind: &str,
    tls: Arc<rustls::ServerConfig>,
    dispatcher: Arc<dyn Dispatcher>,
) -> Result<ServerHandle, TlsError> {
    let listener = TcpListener::bind(bind).await?;
    let local_addr = listener.local_addr()?;
    let acceptor = TlsAcceptor::from(tls);
    let (stop, mut stopped) = watch::channel(false);

    tokio::spawn(async move {
        loop {
            tokio::select! {
                _ = stopped.changed() => break,
                accepted = listener.accept() => {
                    let (tcp, peer) = match accepted {
                        Ok(pair) => pair,
                        Err(e) => {
                            warn!("accept failed: {e}");
                            continue;
                        }
                    };
                    let _ = tcp.set_nodelay(true);
                    let acceptor = acceptor.clone();
                    let dispatcher = dispatcher.clone();
                    tokio::spawn(async move {
                        match acceptor.accept(tcp).await {
                            Ok(tls_stream) => {
                                if let Err(e) = serve_connection(tls_stream, dispatcher).await {
                                    debug!("connection {peer} ended: {e}");
                                }
                            }
                            Err(e) => debug!("TLS handshake with {peer} failed: {e}"),
                        }
                    });
                }
            }
        }
    });

    Ok(ServerHandle { local_addr, stop })
}
