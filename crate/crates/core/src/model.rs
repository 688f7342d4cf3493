//! Domain types for certificates, tickets, pseudonyms, and the protocol
//! request/response messages, plus the identifiable-key hash bindings.
//!
//! All value types here are immutable once built; structural and signature
//! invariants are enforced by the issuing services and re-checked by
//! receivers.

use std::fmt;

use rand_core::CryptoRng;
use thiserror::Error;

use crate::crypto::{digest_parts, Digest, PublicKey, Signature};
use crate::time::{TimeMs, Window};

/// Upper bound for identifier strings on the wire.
pub const MAX_ID_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("identifier exceeds {MAX_ID_LEN} bytes")]
    IdTooLong,
    #[error("identifier is empty")]
    IdEmpty,
    #[error("window start must precede end")]
    EmptyWindow,
}

/// Opaque 16-byte vehicle identifier; registration semantics live out of band.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubjectId(pub [u8; 16]);

impl SubjectId {
    /// Derive a subject id from an arbitrary external label.
    pub fn from_label(label: &str) -> Self {
        let d = crate::crypto::digest(label.as_bytes());
        let mut id = [0u8; 16];
        id.copy_from_slice(&d.0[..16]);
        SubjectId(id)
    }
}

impl fmt::Debug for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubjectId({})", hex::encode(self.0))
    }
}

/// Length-bounded identifier string (LTCA `issuer_id`, PCA identity).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IdString(String);

impl IdString {
    pub fn new(s: impl Into<String>) -> Result<Self, ModelError> {
        let s = s.into();
        if s.is_empty() {
            return Err(ModelError::IdEmpty);
        }
        if s.len() > MAX_ID_LEN {
            return Err(ModelError::IdTooLong);
        }
        Ok(IdString(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Debug for IdString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for IdString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// 32 bytes of fresh randomness: commitment openings and IK blinding values.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct Rnd32(pub [u8; 32]);

impl Rnd32 {
    pub fn fresh<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        Rnd32(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; 32]>::try_from(bytes).ok().map(Rnd32)
    }
}

impl fmt::Debug for Rnd32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rnd32({}..)", hex::encode(&self.0[..4]))
    }
}

/// Long-term certificate: the vehicle's persistent identity credential,
/// signed by its LTCA.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LongTermCertificate {
    pub subject_id: SubjectId,
    pub public_key: PublicKey,
    pub valid_from: TimeMs,
    pub valid_to: TimeMs,
    pub issuer_id: IdString,
    pub signature: Signature,
}

impl LongTermCertificate {
    pub fn validity(&self) -> Window {
        Window { start: self.valid_from, end: self.valid_to }
    }
}

/// Service-granting ticket issued by the LTCA. The PCA the vehicle intends
/// to contact is concealed in `pca_commitment = H(pca_id || rnd_tkt)`;
/// `ik_tkt` binds the ticket to the requesting LTC without revealing it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ticket {
    pub serial: u64,
    pub pca_commitment: Digest,
    pub ik_tkt: Digest,
    pub t_s: TimeMs,
    pub t_e: TimeMs,
    pub exp_tkt: TimeMs,
    pub signature: Signature,
}

impl Ticket {
    pub fn window(&self) -> Window {
        Window { start: self.t_s, end: self.t_e }
    }
}

/// Short-term pseudonym certificate issued by the PCA. `ik_p` binds the
/// pseudonym to the ticket it was issued under.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pseudonym {
    pub serial: u64,
    pub public_key: PublicKey,
    pub ik_p: Digest,
    pub t_s: TimeMs,
    pub t_e: TimeMs,
    pub signature: Signature,
}

impl Pseudonym {
    pub fn lifetime(&self) -> Window {
        Window { start: self.t_s, end: self.t_e }
    }
}

/// Ticket request (vehicle -> LTCA), signed with the LTC private key.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TicketRequest {
    pub req_id: u64,
    pub pca_commitment: Digest,
    pub t_s: TimeMs,
    pub t_e: TimeMs,
    pub ltc: LongTermCertificate,
    pub nonce: u64,
    pub timestamp: TimeMs,
    pub signature: Signature,
}

impl TicketRequest {
    pub fn window(&self) -> Window {
        Window { start: self.t_s, end: self.t_e }
    }
}

/// Ticket response (LTCA -> vehicle). `nonce_echo` must equal request
/// nonce + 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TicketResponse {
    pub res_id: u64,
    pub ticket: Ticket,
    pub rnd_ik_tkt: Rnd32,
    pub nonce_echo: u64,
    pub timestamp: TimeMs,
}

/// A pseudonymous public key self-signed with its own private key: the
/// proof-of-possession carried in a pseudonym request. The signature is
/// over the 33-byte compressed point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SelfSignedKey {
    pub public_key: PublicKey,
    pub signature: Signature,
}

impl SelfSignedKey {
    pub fn create(keypair: &crate::crypto::KeyPair) -> Self {
        let signature = keypair.private.sign(keypair.public.as_bytes());
        SelfSignedKey { public_key: keypair.public.clone(), signature }
    }

    /// Check the proof of possession.
    pub fn verify(&self) -> bool {
        self.public_key.verify(self.public_key.as_bytes(), &self.signature)
    }
}

/// Pseudonym request (vehicle -> PCA). Opens the PCA commitment with
/// `rnd_tkt` and carries one self-signed key per expected lifetime slice.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PsnymRequest {
    pub req_id: u64,
    pub rnd_tkt: Rnd32,
    pub t_s: TimeMs,
    pub t_e: TimeMs,
    pub ticket: Ticket,
    pub keys: Vec<SelfSignedKey>,
    pub nonce: u64,
    pub timestamp: TimeMs,
}

impl PsnymRequest {
    pub fn window(&self) -> Window {
        Window { start: self.t_s, end: self.t_e }
    }
}

/// Pseudonym response (PCA -> vehicle). `rnd_iks` has the same length and
/// order as `pseudonyms`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PsnymResponse {
    pub res_id: u64,
    pub pseudonyms: Vec<Pseudonym>,
    pub rnd_iks: Vec<Rnd32>,
    pub nonce_echo: u64,
    pub timestamp: TimeMs,
}

/// PCA configuration discovery request (vehicle -> PCA); empty body.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConfigRequest {}

/// PCA configuration (PCA -> vehicle): identity, pseudonym lifetime, the
/// universally fixed interval and its day anchor, and the PCA verification
/// key clients use to validate issued pseudonyms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConfigResponse {
    pub pca_id: IdString,
    pub public_key: PublicKey,
    pub tau_p: TimeMs,
    pub gamma_p3: TimeMs,
    pub t_date: TimeMs,
}

/// Vehicle registration (out-of-band provisioning channel, mTLS-gated).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegisterRequest {
    pub subject_id: SubjectId,
    pub public_key: PublicKey,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegisterResponse {
    pub ltc: LongTermCertificate,
}

/// Resolution Authority credential: a static 32-byte shared secret.
#[derive(Copy, Clone, PartialEq, Eq)]
pub struct RaCredential(pub [u8; 32]);

impl RaCredential {
    /// Constant-time comparison; credential checks must not leak prefixes.
    pub fn matches(&self, other: &RaCredential) -> bool {
        let mut diff = 0u8;
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            diff |= a ^ b;
        }
        diff == 0
    }
}

impl fmt::Debug for RaCredential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RaCredential(..)")
    }
}

/// RA -> PCA: reveal the binding material for an issued pseudonym.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RevealPsnymRequest {
    pub serial: u64,
    pub credential: RaCredential,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RevealPsnymResponse {
    pub rnd_ik: Rnd32,
    pub ticket_serial: u64,
    pub ticket_ik: Digest,
}

/// RA -> LTCA: reveal the binding material for an issued ticket. The
/// response carries the stored ticket window and the registered LTC, which
/// are the IK preimage inputs the RA needs to recompute the binding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RevealTicketRequest {
    pub serial: u64,
    pub credential: RaCredential,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RevealTicketResponse {
    pub rnd_ik_tkt: Rnd32,
    pub ltc_digest: Digest,
    pub ltc: LongTermCertificate,
    pub t_s: TimeMs,
    pub t_e: TimeMs,
}

/// Server error surfaced on the wire: a stable numeric code plus detail.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ErrorResponse {
    pub code: u16,
    pub detail: String,
}

/// Hash bindings ("identifiable keys") from the issuance protocols. Issuers
/// compute these at issuance; the RA recomputes them during resolution.
pub mod binding {
    use super::*;

    /// Ticket identifiable key: `H(LTC || t_s || t_e || rnd)`, over the
    /// canonical LTC encoding and big-endian millisecond timestamps.
    pub fn ticket_ik(ltc_encoding: &[u8], window: Window, rnd: &Rnd32) -> Digest {
        digest_parts(&[
            ltc_encoding,
            &window.start.as_millis().to_be_bytes(),
            &window.end.as_millis().to_be_bytes(),
            &rnd.0,
        ])
    }

    /// Pseudonym identifiable key:
    /// `H(ik_tkt || K || t_s || t_e || rnd)` over the compressed point.
    pub fn pseudonym_ik(
        ik_tkt: &Digest,
        public_key: &PublicKey,
        slice: Window,
        rnd: &Rnd32,
    ) -> Digest {
        digest_parts(&[
            &ik_tkt.0,
            public_key.as_bytes(),
            &slice.start.as_millis().to_be_bytes(),
            &slice.end.as_millis().to_be_bytes(),
            &rnd.0,
        ])
    }

    /// PCA concealment commitment: `H(pca_id || rnd_tkt)`.
    pub fn pca_commitment(pca_id: &IdString, rnd_tkt: &Rnd32) -> Digest {
        digest_parts(&[pca_id.as_bytes(), &rnd_tkt.0])
    }
}
