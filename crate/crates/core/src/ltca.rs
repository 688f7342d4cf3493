//! Long-Term CA: vehicle registry, LTC issuance, and service-granting
//! ticket issuance. The LTCA is the policy decision and enforcement point;
//! it authenticates requesters but never learns which PCA they intend to
//! contact (it only sees the hash commitment).

use std::collections::HashMap;
use std::sync::RwLock;

use thiserror::Error;

use crate::codec::{self, Reader, Writer};
use crate::crypto::{digest, Digest, KeyPair, SharedRng};
use crate::model::*;
use crate::store::RecordLog;
use crate::time::{DurMs, TimeMs, Window};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LtcaError {
    #[error("subject already registered")]
    DuplicateRegistration,
    #[error("vehicle unknown to this LTCA")]
    UnknownVehicle,
    #[error("LTC not valid at this time")]
    ExpiredLtc,
    #[error("signature verification failed")]
    BadSignature,
    #[error("request timestamp outside freshness window")]
    StaleTimestamp,
    #[error("invalid request window")]
    InvalidWindow,
    #[error("unknown ticket serial")]
    UnknownSerial,
    #[error("caller not authorized for resolution")]
    Unauthorized,
    #[error("storage failure: {0}")]
    Storage(String),
}

impl LtcaError {
    /// Stable numeric code for the wire; see `ErrorResponse`.
    pub fn wire_code(&self) -> u16 {
        match self {
            LtcaError::DuplicateRegistration => 101,
            LtcaError::UnknownVehicle => 102,
            LtcaError::ExpiredLtc => 103,
            LtcaError::BadSignature => 104,
            LtcaError::StaleTimestamp => 105,
            LtcaError::InvalidWindow => 106,
            LtcaError::UnknownSerial => 107,
            LtcaError::Unauthorized => 108,
            LtcaError::Storage(_) => 190,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LtcaConfig {
    pub issuer_id: IdString,
    /// Freshness window for request timestamps.
    pub skew: DurMs,
    /// Grace added to a ticket's window end to form its expiry.
    pub ticket_grace: DurMs,
    /// Optional cap on requested window length (None = unlimited).
    pub max_window: Option<DurMs>,
    /// LTC validity from registration.
    pub ltc_validity: DurMs,
    pub ra_credential: RaCredential,
}

impl LtcaConfig {
    pub fn new(issuer_id: IdString, ra_credential: RaCredential) -> Self {
        LtcaConfig {
            issuer_id,
            skew: DurMs::from_secs(60),
            ticket_grace: DurMs::from_secs(60),
            max_window: None,
            ltc_validity: DurMs::from_secs(365 * 24 * 3600),
            ra_credential,
        }
    }
}

/// Stored per issued ticket, for resolution.
#[derive(Clone, Debug)]
struct TicketBinding {
    ticket: Ticket,
    rnd_ik_tkt: Rnd32,
    ltc_digest: Digest,
}

#[derive(Default)]
struct State {
    registry: HashMap<SubjectId, LongTermCertificate>,
    by_digest: HashMap<Digest, SubjectId>,
    issued: HashMap<u64, TicketBinding>,
    serial_counter: u64,
}

pub struct Ltca {
    config: LtcaConfig,
    keys: KeyPair,
    rng: SharedRng,
    log: Box<dyn RecordLog>,
    state: RwLock<State>,
}

const REC_REGISTERED: u8 = 1;
const REC_TICKET: u8 = 2;

impl Ltca {
    /// Open the service, replaying any existing log records.
    pub fn new(
        config: LtcaConfig,
        keys: KeyPair,
        rng: SharedRng,
        log: Box<dyn RecordLog>,
    ) -> Result<Self, LtcaError> {
        let mut state = State::default();
        for record in log.read_all().map_err(|e| LtcaError::Storage(e.to_string()))? {
            Self::replay(&mut state, &record)?;
        }
        Ok(Ltca { config, keys, rng, log, state: RwLock::new(state) })
    }

    fn replay(state: &mut State, record: &[u8]) -> Result<(), LtcaError> {
        let corrupt = |_| LtcaError::Storage("corrupt log record".into());
        let mut r = Reader::new(record);
        match r.get_u8().map_err(corrupt)? {
            REC_REGISTERED => {
                let ltc: LongTermCertificate =
                    codec::decode(r.get_bytes16().map_err(corrupt)?).map_err(corrupt)?;
                state.by_digest.insert(digest(&codec::encode(&ltc)), ltc.subject_id);
                state.registry.insert(ltc.subject_id, ltc);
            }
            REC_TICKET => {
                let ticket: Ticket =
                    codec::decode(r.get_bytes16().map_err(corrupt)?).map_err(corrupt)?;
                let rnd_ik_tkt = Rnd32(r.get_array::<32>().map_err(corrupt)?);
                let ltc_digest =
                    Digest(r.get_array::<32>().map_err(corrupt)?);
                state.serial_counter = state.serial_counter.max(ticket.serial + 1);
                state
                    .issued
                    .insert(ticket.serial, TicketBinding { ticket, rnd_ik_tkt, ltc_digest });
            }
            _ => return Err(LtcaError::Storage("unknown log record tag".into())),
        }
        Ok(())
    }

    fn persist(&self, record: Vec<u8>) -> Result<(), LtcaError> {
        self.log.append(&record).map_err(|e| LtcaError::Storage(e.to_string()))
    }

    pub fn issuer_id(&self) -> &IdString {
        &self.config.issuer_id
    }

    pub fn public_key(&self) -> &crate::crypto::PublicKey {
        &self.keys.public
    }

    pub fn config(&self) -> &LtcaConfig {
        &self.config
    }

    /// Register a vehicle and issue its LTC, valid `ltc_validity` from `now`.
    pub fn register_vehicle(
        &self,
        subject_id: SubjectId,
        public_key: crate::crypto::PublicKey,
        now: TimeMs,
    ) -> Result<LongTermCertificate, LtcaError> {
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        if state.registry.contains_key(&subject_id) {
            return Err(LtcaError::DuplicateRegistration);
        }
        let mut ltc = LongTermCertificate {
            subject_id,
            public_key,
            valid_from: now,
            valid_to: now + self.config.ltc_validity,
            issuer_id: self.config.issuer_id.clone(),
            signature: crate::crypto::Signature([0; 64]),
        };
        ltc.signature = self.keys.private.sign(&codec::signed_payload(&ltc));

        let mut w = Writer::new();
        w.put_u8(REC_REGISTERED);
        w.put_bytes16(&codec::encode(&ltc));
        self.persist(w.into_bytes())?;

        state.by_digest.insert(digest(&codec::encode(&ltc)), subject_id);
        state.registry.insert(subject_id, ltc.clone());
        Ok(ltc)
    }

    /// Protocol: ticket issuance. Verifies the requester's LTC and request
    /// signature, checks freshness and the window, computes the ticket
    /// identifiable key `H(LTC || t_s || t_e || rnd)`, signs the ticket, and
    /// persists the binding for resolution.
    pub fn issue_ticket(
        &self,
        req: &TicketRequest,
        now: TimeMs,
    ) -> Result<TicketResponse, LtcaError> {
        // Authentication and authorization against the registry.
        {
            let state = self.state.read().unwrap_or_else(|e| e.into_inner());
            if req.ltc.issuer_id != self.config.issuer_id {
                return Err(LtcaError::UnknownVehicle);
            }
            match state.registry.get(&req.ltc.subject_id) {
                Some(stored) if *stored == req.ltc => {}
                _ => return Err(LtcaError::UnknownVehicle),
            }
        }
        if !self.keys.public.verify(&codec::signed_payload(&req.ltc), &req.ltc.signature) {
            return Err(LtcaError::BadSignature);
        }
        if !req.ltc.validity().contains(now) {
            return Err(LtcaError::ExpiredLtc);
        }
        if !req.ltc.public_key.verify(&codec::signed_payload(req), &req.signature) {
            return Err(LtcaError::BadSignature);
        }

        if now.abs_diff(req.timestamp) > self.config.skew {
            return Err(LtcaError::StaleTimestamp);
        }

        if req.t_s >= req.t_e {
            return Err(LtcaError::InvalidWindow);
        }
        if let Some(cap) = self.config.max_window {
            if req.t_e - req.t_s > cap {
                return Err(LtcaError::InvalidWindow);
            }
        }

        let window = Window { start: req.t_s, end: req.t_e };
        let ltc_encoding = codec::encode(&req.ltc);
        let mut rnd_bytes = [0u8; 32];
        self.rng.fill(&mut rnd_bytes);
        let rnd_ik_tkt = Rnd32(rnd_bytes);
        let ik_tkt = binding::ticket_ik(&ltc_encoding, window, &rnd_ik_tkt);

        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let serial = state.serial_counter;
        let mut ticket = Ticket {
            serial,
            pca_commitment: req.pca_commitment,
            ik_tkt,
            t_s: req.t_s,
            t_e: req.t_e,
            exp_tkt: req.t_e + self.config.ticket_grace,
            signature: crate::crypto::Signature([0; 64]),
        };
        ticket.signature = self.keys.private.sign(&codec::signed_payload(&ticket));

        let ltc_digest = digest(&ltc_encoding);
        let mut w = Writer::new();
        w.put_u8(REC_TICKET);
        w.put_bytes16(&codec::encode(&ticket));
        w.put_raw(&rnd_ik_tkt.0);
        w.put_raw(&ltc_digest.0);
        self.persist(w.into_bytes())?;

        state.serial_counter += 1;
        state.issued.insert(
            serial,
            TicketBinding { ticket: ticket.clone(), rnd_ik_tkt, ltc_digest },
        );
        drop(state);

        Ok(TicketResponse {
            res_id: req.req_id,
            ticket,
            rnd_ik_tkt,
            nonce_echo: req.nonce.wrapping_add(1),
            timestamp: now,
        })
    }

    /// Resolution support: reveal the binding material for an issued
    /// ticket, including the registered LTC whose encoding is the IK
    /// preimage.
    pub fn reveal_ticket_binding(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealTicketResponse, LtcaError> {
        if !self.config.ra_credential.matches(credential) {
            return Err(LtcaError::Unauthorized);
        }
        let state = self.state.read().unwrap_or_else(|e| e.into_inner());
        let bound = state.issued.get(&serial).ok_or(LtcaError::UnknownSerial)?;
        let subject =
            state.by_digest.get(&bound.ltc_digest).ok_or(LtcaError::UnknownSerial)?;
        let ltc = state.registry.get(subject).ok_or(LtcaError::UnknownSerial)?.clone();
        Ok(RevealTicketResponse {
            rnd_ik_tkt: bound.rnd_ik_tkt,
            ltc_digest: bound.ltc_digest,
            ltc,
            t_s: bound.ticket.t_s,
            t_e: bound.ticket.t_e,
        })
    }

    /// Number of tickets issued so far (diagnostics).
    pub fn tickets_issued(&self) -> u64 {
        self.state.read().unwrap_or_else(|e| e.into_inner()).serial_counter
    }
}
