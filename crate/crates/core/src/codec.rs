//! Canonical, deterministic byte encoding for all protocol messages.
//!
//! Layout rules (version 1):
//! - every top-level and nested message starts with `version: u8` and a
//!   `msg_type: u8` tag;
//! - integers are big-endian fixed width; timestamps are u64 milliseconds;
//! - fixed-width fields (digests, 33-byte points, 64-byte signatures, 16-byte
//!   subject ids, 32-byte random values) are written raw;
//! - variable byte strings carry a u16 length prefix, lists a u16 count
//!   prefix;
//! - fields appear in the order declared on the struct, and the signature of
//!   a signed structure is always its final field, so the signed payload is
//!   a prefix of the full encoding.

use thiserror::Error;

use crate::crypto::{Digest, PublicKey, Signature, DIGEST_LEN, PUBLIC_KEY_LEN, SIGNATURE_LEN};
use crate::model::*;
use crate::time::TimeMs;

pub const WIRE_VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated")]
    Truncated,
    #[error("unknown wire version {0}")]
    UnknownVersion(u8),
    #[error("unknown message type {0}")]
    UnknownMsgType(u8),
    #[error("unexpected message type {got}, wanted {want}")]
    WrongMsgType { want: u8, got: u8 },
    #[error("trailing bytes after message")]
    TrailingBytes,
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

/// Message type tags. Values are part of the wire format; never reuse them.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
#[repr(u8)]
pub enum MsgType {
    LongTermCertificate = 1,
    Ticket = 2,
    Pseudonym = 3,
    TicketRequest = 4,
    TicketResponse = 5,
    PsnymRequest = 6,
    PsnymResponse = 7,
    ConfigRequest = 8,
    ConfigResponse = 9,
    RegisterRequest = 10,
    RegisterResponse = 11,
    RevealTicketRequest = 12,
    RevealTicketResponse = 13,
    RevealPsnymRequest = 14,
    RevealPsnymResponse = 15,
    Error = 16,
}

impl MsgType {
    fn from_u8(tag: u8) -> Result<Self, CodecError> {
        use MsgType::*;
        Ok(match tag {
            1 => LongTermCertificate,
            2 => Ticket,
            3 => Pseudonym,
            4 => TicketRequest,
            5 => TicketResponse,
            6 => PsnymRequest,
            7 => PsnymResponse,
            8 => ConfigRequest,
            9 => ConfigResponse,
            10 => RegisterRequest,
            11 => RegisterResponse,
            12 => RevealTicketRequest,
            13 => RevealTicketResponse,
            14 => RevealPsnymRequest,
            15 => RevealPsnymResponse,
            16 => Error,
            other => return Err(CodecError::UnknownMsgType(other)),
        })
    }
}

/// Append-only canonical byte writer.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_time(&mut self, t: TimeMs) {
        self.put_u64(t.as_millis());
    }

    pub fn put_raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// u16 length-prefixed byte string. Lengths are bounded at construction
    /// time (see `model::MAX_ID_LEN`); exceeding u16 here is a programming
    /// error.
    pub fn put_bytes16(&mut self, bytes: &[u8]) {
        let len = u16::try_from(bytes.len()).expect("byte string exceeds u16 length prefix");
        self.put_u16(len);
        self.put_raw(bytes);
    }

    fn put_count16(&mut self, n: usize) {
        let n = u16::try_from(n).expect("list exceeds u16 count prefix");
        self.put_u16(n);
    }
}

/// Bounds-checked cursor over an input buffer.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::Truncated);
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn get_u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn get_u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn get_u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_time(&mut self) -> Result<TimeMs, CodecError> {
        Ok(TimeMs(self.get_u64()?))
    }

    pub fn get_array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn get_bytes16(&mut self) -> Result<&'a [u8], CodecError> {
        let len = self.get_u16()? as usize;
        self.take(len)
    }

    fn get_digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest(self.get_array::<DIGEST_LEN>()?))
    }

    fn get_rnd32(&mut self) -> Result<Rnd32, CodecError> {
        Ok(Rnd32(self.get_array::<32>()?))
    }

    fn get_public_key(&mut self) -> Result<PublicKey, CodecError> {
        let bytes = self.take(PUBLIC_KEY_LEN)?;
        PublicKey::from_sec1_bytes(bytes).map_err(|_| CodecError::InvalidField("public_key"))
    }

    fn get_signature(&mut self) -> Result<Signature, CodecError> {
        Ok(Signature(self.get_array::<SIGNATURE_LEN>()?))
    }

    fn get_id_string(&mut self) -> Result<IdString, CodecError> {
        let bytes = self.get_bytes16()?;
        let s = std::str::from_utf8(bytes).map_err(|_| CodecError::InvalidField("utf8"))?;
        IdString::new(s).map_err(|_| CodecError::InvalidField("identifier"))
    }
}

/// A protocol message with a fixed wire tag.
pub trait WireMessage: Sized {
    const MSG_TYPE: MsgType;
    fn write_body(&self, w: &mut Writer);
    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError>;
}

/// A message whose final field is a signature; the signed payload is the
/// full encoding with that signature omitted.
pub trait SignedWireMessage: WireMessage {
    fn write_presig(&self, w: &mut Writer);
    fn signature(&self) -> &Signature;
}

fn write_envelope<M: WireMessage>(w: &mut Writer) {
    w.put_u8(WIRE_VERSION);
    w.put_u8(M::MSG_TYPE as u8);
}

fn read_envelope<M: WireMessage>(r: &mut Reader<'_>) -> Result<(), CodecError> {
    let version = r.get_u8()?;
    if version != WIRE_VERSION {
        return Err(CodecError::UnknownVersion(version));
    }
    let tag = r.get_u8()?;
    MsgType::from_u8(tag)?;
    if tag != M::MSG_TYPE as u8 {
        return Err(CodecError::WrongMsgType { want: M::MSG_TYPE as u8, got: tag });
    }
    Ok(())
}

/// Canonical encoding: envelope header followed by the body fields.
pub fn encode<M: WireMessage>(msg: &M) -> Vec<u8> {
    let mut w = Writer::new();
    write_nested(msg, &mut w);
    w.into_bytes()
}

fn write_nested<M: WireMessage>(msg: &M, w: &mut Writer) {
    write_envelope::<M>(w);
    msg.write_body(w);
}

fn read_nested<M: WireMessage>(r: &mut Reader<'_>) -> Result<M, CodecError> {
    read_envelope::<M>(r)?;
    M::read_body(r)
}

/// Decode one message of a known type; rejects version/type mismatches and
/// trailing bytes. Never panics on adversarial input.
pub fn decode<M: WireMessage>(bytes: &[u8]) -> Result<M, CodecError> {
    let mut r = Reader::new(bytes);
    let msg = read_nested::<M>(&mut r)?;
    if r.remaining() != 0 {
        return Err(CodecError::TrailingBytes);
    }
    Ok(msg)
}

/// The bytes a signature over `msg` covers: envelope header plus all body
/// fields except the trailing signature.
pub fn signed_payload<M: SignedWireMessage>(msg: &M) -> Vec<u8> {
    let mut w = Writer::new();
    write_envelope::<M>(&mut w);
    msg.write_presig(&mut w);
    w.into_bytes()
}

impl WireMessage for LongTermCertificate {
    const MSG_TYPE: MsgType = MsgType::LongTermCertificate;

    fn write_body(&self, w: &mut Writer) {
        self.write_presig(w);
        w.put_raw(self.signature.as_bytes());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(LongTermCertificate {
            subject_id: SubjectId(r.get_array::<16>()?),
            public_key: r.get_public_key()?,
            valid_from: r.get_time()?,
            valid_to: r.get_time()?,
            issuer_id: r.get_id_string()?,
            signature: r.get_signature()?,
        })
    }
}

impl SignedWireMessage for LongTermCertificate {
    fn write_presig(&self, w: &mut Writer) {
        w.put_raw(&self.subject_id.0);
        w.put_raw(self.public_key.as_bytes());
        w.put_time(self.valid_from);
        w.put_time(self.valid_to);
        w.put_bytes16(self.issuer_id.as_bytes());
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }
}

impl WireMessage for Ticket {
    const MSG_TYPE: MsgType = MsgType::Ticket;

    fn write_body(&self, w: &mut Writer) {
        self.write_presig(w);
        w.put_raw(self.signature.as_bytes());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Ticket {
            serial: r.get_u64()?,
            pca_commitment: r.get_digest()?,
            ik_tkt: r.get_digest()?,
            t_s: r.get_time()?,
            t_e: r.get_time()?,
            exp_tkt: r.get_time()?,
            signature: r.get_signature()?,
        })
    }
}

impl SignedWireMessage for Ticket {
    fn write_presig(&self, w: &mut Writer) {
        w.put_u64(self.serial);
        w.put_raw(&self.pca_commitment.0);
        w.put_raw(&self.ik_tkt.0);
        w.put_time(self.t_s);
        w.put_time(self.t_e);
        w.put_time(self.exp_tkt);
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }
}

impl WireMessage for Pseudonym {
    const MSG_TYPE: MsgType = MsgType::Pseudonym;

    fn write_body(&self, w: &mut Writer) {
        self.write_presig(w);
        w.put_raw(self.signature.as_bytes());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Pseudonym {
            serial: r.get_u64()?,
            public_key: r.get_public_key()?,
            ik_p: r.get_digest()?,
            t_s: r.get_time()?,
            t_e: r.get_time()?,
            signature: r.get_signature()?,
        })
    }
}

impl SignedWireMessage for Pseudonym {
    fn write_presig(&self, w: &mut Writer) {
        w.put_u64(self.serial);
        w.put_raw(self.public_key.as_bytes());
        w.put_raw(&self.ik_p.0);
        w.put_time(self.t_s);
        w.put_time(self.t_e);
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }
}

impl WireMessage for TicketRequest {
    const MSG_TYPE: MsgType = MsgType::TicketRequest;

    fn write_body(&self, w: &mut Writer) {
        self.write_presig(w);
        w.put_raw(self.signature.as_bytes());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(TicketRequest {
            req_id: r.get_u64()?,
            pca_commitment: r.get_digest()?,
            t_s: r.get_time()?,
            t_e: r.get_time()?,
            ltc: read_nested(r)?,
            nonce: r.get_u64()?,
            timestamp: r.get_time()?,
            signature: r.get_signature()?,
        })
    }
}

impl SignedWireMessage for TicketRequest {
    fn write_presig(&self, w: &mut Writer) {
        w.put_u64(self.req_id);
        w.put_raw(&self.pca_commitment.0);
        w.put_time(self.t_s);
        w.put_time(self.t_e);
        write_nested(&self.ltc, w);
        w.put_u64(self.nonce);
        w.put_time(self.timestamp);
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }
}

impl WireMessage for TicketResponse {
    const MSG_TYPE: MsgType = MsgType::TicketResponse;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.res_id);
        write_nested(&self.ticket, w);
        w.put_raw(&self.rnd_ik_tkt.0);
        w.put_u64(self.nonce_echo);
        w.put_time(self.timestamp);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(TicketResponse {
            res_id: r.get_u64()?,
            ticket: read_nested(r)?,
            rnd_ik_tkt: r.get_rnd32()?,
            nonce_echo: r.get_u64()?,
            timestamp: r.get_time()?,
        })
    }
}

impl WireMessage for PsnymRequest {
    const MSG_TYPE: MsgType = MsgType::PsnymRequest;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.req_id);
        w.put_raw(&self.rnd_tkt.0);
        w.put_time(self.t_s);
        w.put_time(self.t_e);
        write_nested(&self.ticket, w);
        w.put_count16(self.keys.len());
        for key in &self.keys {
            w.put_raw(key.public_key.as_bytes());
            w.put_raw(key.signature.as_bytes());
        }
        w.put_u64(self.nonce);
        w.put_time(self.timestamp);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let req_id = r.get_u64()?;
        let rnd_tkt = r.get_rnd32()?;
        let t_s = r.get_time()?;
        let t_e = r.get_time()?;
        let ticket = read_nested(r)?;
        let count = r.get_u16()? as usize;
        let mut keys = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            keys.push(SelfSignedKey {
                public_key: r.get_public_key()?,
                signature: r.get_signature()?,
            });
        }
        Ok(PsnymRequest {
            req_id,
            rnd_tkt,
            t_s,
            t_e,
            ticket,
            keys,
            nonce: r.get_u64()?,
            timestamp: r.get_time()?,
        })
    }
}

impl WireMessage for PsnymResponse {
    const MSG_TYPE: MsgType = MsgType::PsnymResponse;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.res_id);
        w.put_count16(self.pseudonyms.len());
        for p in &self.pseudonyms {
            write_nested(p, w);
        }
        w.put_count16(self.rnd_iks.len());
        for rnd in &self.rnd_iks {
            w.put_raw(&rnd.0);
        }
        w.put_u64(self.nonce_echo);
        w.put_time(self.timestamp);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let res_id = r.get_u64()?;
        let count = r.get_u16()? as usize;
        let mut pseudonyms = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            pseudonyms.push(read_nested(r)?);
        }
        let rnd_count = r.get_u16()? as usize;
        let mut rnd_iks = Vec::with_capacity(rnd_count.min(1024));
        for _ in 0..rnd_count {
            rnd_iks.push(r.get_rnd32()?);
        }
        Ok(PsnymResponse {
            res_id,
            pseudonyms,
            rnd_iks,
            nonce_echo: r.get_u64()?,
            timestamp: r.get_time()?,
        })
    }
}

impl WireMessage for ConfigRequest {
    const MSG_TYPE: MsgType = MsgType::ConfigRequest;

    fn write_body(&self, _w: &mut Writer) {}

    fn read_body(_r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ConfigRequest {})
    }
}

impl WireMessage for ConfigResponse {
    const MSG_TYPE: MsgType = MsgType::ConfigResponse;

    fn write_body(&self, w: &mut Writer) {
        w.put_bytes16(self.pca_id.as_bytes());
        w.put_raw(self.public_key.as_bytes());
        w.put_time(self.tau_p);
        w.put_time(self.gamma_p3);
        w.put_time(self.t_date);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ConfigResponse {
            pca_id: r.get_id_string()?,
            public_key: r.get_public_key()?,
            tau_p: r.get_time()?,
            gamma_p3: r.get_time()?,
            t_date: r.get_time()?,
        })
    }
}

impl WireMessage for RegisterRequest {
    const MSG_TYPE: MsgType = MsgType::RegisterRequest;

    fn write_body(&self, w: &mut Writer) {
        w.put_raw(&self.subject_id.0);
        w.put_raw(self.public_key.as_bytes());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RegisterRequest {
            subject_id: SubjectId(r.get_array::<16>()?),
            public_key: r.get_public_key()?,
        })
    }
}

impl WireMessage for RegisterResponse {
    const MSG_TYPE: MsgType = MsgType::RegisterResponse;

    fn write_body(&self, w: &mut Writer) {
        write_nested(&self.ltc, w);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RegisterResponse { ltc: read_nested(r)? })
    }
}

impl WireMessage for RevealTicketRequest {
    const MSG_TYPE: MsgType = MsgType::RevealTicketRequest;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.serial);
        w.put_raw(&self.credential.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RevealTicketRequest {
            serial: r.get_u64()?,
            credential: RaCredential(r.get_array::<32>()?),
        })
    }
}

impl WireMessage for RevealTicketResponse {
    const MSG_TYPE: MsgType = MsgType::RevealTicketResponse;

    fn write_body(&self, w: &mut Writer) {
        w.put_raw(&self.rnd_ik_tkt.0);
        w.put_raw(&self.ltc_digest.0);
        write_nested(&self.ltc, w);
        w.put_time(self.t_s);
        w.put_time(self.t_e);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RevealTicketResponse {
            rnd_ik_tkt: r.get_rnd32()?,
            ltc_digest: r.get_digest()?,
            ltc: read_nested(r)?,
            t_s: r.get_time()?,
            t_e: r.get_time()?,
        })
    }
}

impl WireMessage for RevealPsnymRequest {
    const MSG_TYPE: MsgType = MsgType::RevealPsnymRequest;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.serial);
        w.put_raw(&self.credential.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RevealPsnymRequest {
            serial: r.get_u64()?,
            credential: RaCredential(r.get_array::<32>()?),
        })
    }
}

impl WireMessage for RevealPsnymResponse {
    const MSG_TYPE: MsgType = MsgType::RevealPsnymResponse;

    fn write_body(&self, w: &mut Writer) {
        w.put_raw(&self.rnd_ik.0);
        w.put_u64(self.ticket_serial);
        w.put_raw(&self.ticket_ik.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RevealPsnymResponse {
            rnd_ik: r.get_rnd32()?,
            ticket_serial: r.get_u64()?,
            ticket_ik: r.get_digest()?,
        })
    }
}

impl WireMessage for ErrorResponse {
    const MSG_TYPE: MsgType = MsgType::Error;

    fn write_body(&self, w: &mut Writer) {
        w.put_u16(self.code);
        w.put_bytes16(self.detail.as_bytes());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let code = r.get_u16()?;
        let detail = std::str::from_utf8(r.get_bytes16()?)
            .map_err(|_| CodecError::InvalidField("utf8"))?
            .to_owned();
        Ok(ErrorResponse { code, detail })
    }
}

/// Any decodable protocol message; servers dispatch on this.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AnyMessage {
    LongTermCertificate(LongTermCertificate),
    Ticket(Ticket),
    Pseudonym(Pseudonym),
    TicketRequest(TicketRequest),
    TicketResponse(TicketResponse),
    PsnymRequest(PsnymRequest),
    PsnymResponse(PsnymResponse),
    ConfigRequest(ConfigRequest),
    ConfigResponse(ConfigResponse),
    RegisterRequest(RegisterRequest),
    RegisterResponse(RegisterResponse),
    RevealTicketRequest(RevealTicketRequest),
    RevealTicketResponse(RevealTicketResponse),
    RevealPsnymRequest(RevealPsnymRequest),
    RevealPsnymResponse(RevealPsnymResponse),
    Error(ErrorResponse),
}

/// Decode without knowing the type in advance.
pub fn decode_any(bytes: &[u8]) -> Result<AnyMessage, CodecError> {
    let mut r = Reader::new(bytes);
    let version = r.get_u8()?;
    if version != WIRE_VERSION {
        return Err(CodecError::UnknownVersion(version));
    }
    let tag = MsgType::from_u8(r.get_u8()?)?;
    let msg = match tag {
        MsgType::LongTermCertificate => {
            AnyMessage::LongTermCertificate(LongTermCertificate::read_body(&mut r)?)
        }
        MsgType::Ticket => AnyMessage::Ticket(Ticket::read_body(&mut r)?),
        MsgType::Pseudonym => AnyMessage::Pseudonym(Pseudonym::read_body(&mut r)?),
        MsgType::TicketRequest => AnyMessage::TicketRequest(TicketRequest::read_body(&mut r)?),
        MsgType::TicketResponse => AnyMessage::TicketResponse(TicketResponse::read_body(&mut r)?),
        MsgType::PsnymRequest => AnyMessage::PsnymRequest(PsnymRequest::read_body(&mut r)?),
        MsgType::PsnymResponse => AnyMessage::PsnymResponse(PsnymResponse::read_body(&mut r)?),
        MsgType::ConfigRequest => AnyMessage::ConfigRequest(ConfigRequest::read_body(&mut r)?),
        MsgType::ConfigResponse => AnyMessage::ConfigResponse(ConfigResponse::read_body(&mut r)?),
        MsgType::RegisterRequest => {
            AnyMessage::RegisterRequest(RegisterRequest::read_body(&mut r)?)
        }
        MsgType::RegisterResponse => {
            AnyMessage::RegisterResponse(RegisterResponse::read_body(&mut r)?)
        }
        MsgType::RevealTicketRequest => {
            AnyMessage::RevealTicketRequest(RevealTicketRequest::read_body(&mut r)?)
        }
        MsgType::RevealTicketResponse => {
            AnyMessage::RevealTicketResponse(RevealTicketResponse::read_body(&mut r)?)
        }
        MsgType::RevealPsnymRequest => {
            AnyMessage::RevealPsnymRequest(RevealPsnymRequest::read_body(&mut r)?)
        }
        MsgType::RevealPsnymResponse => {
            AnyMessage::RevealPsnymResponse(RevealPsnymResponse::read_body(&mut r)?)
        }
        MsgType::Error => AnyMessage::Error(ErrorResponse::read_body(&mut r)?),
    };
    if r.remaining() != 0 {
        return Err(CodecError::TrailingBytes);
    }
    Ok(msg)
}
