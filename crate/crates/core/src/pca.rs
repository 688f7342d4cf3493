//! Pseudonym CA: validates tickets, opens the provider commitment, checks
//! proof-of-possession, and issues batches of pseudonyms with consecutive
//! non-overlapping lifetimes. The PCA never sees an LTC or any long-term
//! vehicle identifier.

use std::collections::{HashMap, HashSet};
use std::sync::RwLock;

use thiserror::Error;

use crate::codec::{self, Reader, Writer};
use crate::crypto::{Digest, KeyPair, PublicKey, SharedRng, Signature};
use crate::model::*;
use crate::policy::{self, PolicyError};
use crate::store::RecordLog;
use crate::time::{DurMs, TimeMs, Window};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PcaError {
    #[error("ticket not signed by a trusted LTCA")]
    UntrustedIssuer,
    #[error("ticket expired")]
    ExpiredTicket,
    #[error("ticket already used")]
    TicketAlreadyUsed,
    #[error("PCA commitment does not open to this PCA")]
    CommitmentMismatch,
    #[error("requested interval differs from ticket interval")]
    IntervalMismatch,
    #[error("proof of possession failed for key {0}")]
    PopFailure(u16),
    #[error("expected {expected} keys, got {got}")]
    KeyCountMismatch { expected: u16, got: u16 },
    #[error("request timestamp outside freshness window")]
    StaleTimestamp,
    #[error("every slice in the window is already expired")]
    NoUsefulSlices,
    #[error("invalid request window")]
    InvalidWindow,
    #[error("unknown pseudonym serial")]
    UnknownSerial,
    #[error("caller not authorized for resolution")]
    Unauthorized,
    #[error("storage failure: {0}")]
    Storage(String),
}

impl PcaError {
    pub fn wire_code(&self) -> u16 {
        match self {
            PcaError::UntrustedIssuer => 201,
            PcaError::ExpiredTicket => 202,
            PcaError::TicketAlreadyUsed => 203,
            PcaError::CommitmentMismatch => 204,
            PcaError::IntervalMismatch => 205,
            PcaError::PopFailure(_) => 206,
            PcaError::KeyCountMismatch { .. } => 207,
            PcaError::StaleTimestamp => 208,
            PcaError::NoUsefulSlices => 209,
            PcaError::InvalidWindow => 210,
            PcaError::UnknownSerial => 211,
            PcaError::Unauthorized => 212,
            PcaError::Storage(_) => 290,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcaConfig {
    pub pca_id: IdString,
    pub tau_p: DurMs,
    pub gamma_p3: DurMs,
    /// Day anchor for the P3 grid.
    pub t_date: TimeMs,
    pub skew: DurMs,
    pub ra_credential: RaCredential,
}

impl PcaConfig {
    pub fn new(
        pca_id: IdString,
        tau_p: DurMs,
        gamma_p3: DurMs,
        t_date: TimeMs,
        ra_credential: RaCredential,
    ) -> Result<Self, PcaError> {
        if tau_p.is_zero() || gamma_p3.is_zero()
            || gamma_p3.as_millis() % tau_p.as_millis() != 0
        {
            return Err(PcaError::InvalidWindow);
        }
        Ok(PcaConfig {
            pca_id,
            tau_p,
            gamma_p3,
            t_date,
            skew: DurMs::from_secs(60),
            ra_credential,
        })
    }
}

/// Stored per issued pseudonym, for resolution.
#[derive(Clone, Debug)]
struct PsnymBinding {
    rnd_ik: Rnd32,
    ticket_serial: u64,
    ticket_ik: Digest,
}

#[derive(Default)]
struct State {
    issued: HashMap<u64, PsnymBinding>,
    used_tickets: HashSet<u64>,
    serial_counter: u64,
}

pub struct Pca {
    config: PcaConfig,
    keys: KeyPair,
    trust_store: HashMap<IdString, PublicKey>,
    rng: SharedRng,
    log: Box<dyn RecordLog>,
    state: RwLock<State>,
}

const REC_BATCH: u8 = 1;

impl Pca {
    pub fn new(
        config: PcaConfig,
        keys: KeyPair,
        trust_store: HashMap<IdString, PublicKey>,
        rng: SharedRng,
        log: Box<dyn RecordLog>,
    ) -> Result<Self, PcaError> {
        let mut state = State::default();
        for record in log.read_all().map_err(|e| PcaError::Storage(e.to_string()))? {
            Self::replay(&mut state, &record)?;
        }
        Ok(Pca { config, keys, trust_store, rng, log, state: RwLock::new(state) })
    }

    fn replay(state: &mut State, record: &[u8]) -> Result<(), PcaError> {
        let corrupt = |_| PcaError::Storage("corrupt log record".into());
        let mut r = Reader::new(record);
        match r.get_u8().map_err(corrupt)? {
            REC_BATCH => {
                let ticket_serial = r.get_u64().map_err(corrupt)?;
                let ticket_ik = Digest(r.get_array::<32>().map_err(corrupt)?);
                let count = r.get_u16().map_err(corrupt)?;
                state.used_tickets.insert(ticket_serial);
                for _ in 0..count {
                    let serial = r.get_u64().map_err(corrupt)?;
                    let rnd_ik = Rnd32(r.get_array::<32>().map_err(corrupt)?);
                    state.serial_counter = state.serial_counter.max(serial + 1);
                    state.issued.insert(serial, PsnymBinding { rnd_ik, ticket_serial, ticket_ik });
                }
            }
            _ => return Err(PcaError::Storage("unknown log record tag".into())),
        }
        Ok(())
    }

    pub fn config(&self) -> &PcaConfig {
        &self.config
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keys.public
    }

    /// Static client-facing configuration.
    pub fn get_config(&self) -> ConfigResponse {
        ConfigResponse {
            pca_id: self.config.pca_id.clone(),
            public_key: self.keys.public.clone(),
            tau_p: TimeMs(self.config.tau_p.as_millis()),
            gamma_p3: TimeMs(self.config.gamma_p3.as_millis()),
            t_date: self.config.t_date,
        }
    }

    /// Protocol: pseudonym issuance. Check order follows the issuing
    /// protocol: ticket signature and expiry, commitment opening, interval
    /// equality, proof of possession, slice-count law, then batch issuance
    /// with fresh identifiable keys.
    pub fn issue_pseudonyms(
        &self,
        req: &PsnymRequest,
        now: TimeMs,
    ) -> Result<PsnymResponse, PcaError> {
        if now.abs_diff(req.timestamp) > self.config.skew {
            return Err(PcaError::StaleTimestamp);
        }

        let ticket = &req.ticket;
        let ticket_payload = codec::signed_payload(ticket);
        let trusted = self
            .trust_store
            .values()
            .any(|key| key.verify(&ticket_payload, &ticket.signature));
        if !trusted {
            return Err(PcaError::UntrustedIssuer);
        }
        if now > ticket.exp_tkt {
            return Err(PcaError::ExpiredTicket);
        }

        let opened = binding::pca_commitment(&self.config.pca_id, &req.rnd_tkt);
        if opened != ticket.pca_commitment {
            return Err(PcaError::CommitmentMismatch);
        }

        if req.t_s != ticket.t_s || req.t_e != ticket.t_e {
            return Err(PcaError::IntervalMismatch);
        }
        if req.t_s >= req.t_e {
            return Err(PcaError::InvalidWindow);
        }

        for (i, key) in req.keys.iter().enumerate() {
            if !key.verify() {
                return Err(PcaError::PopFailure(i as u16));
            }
        }

        // Slice relative to the request timestamp so client and PCA agree
        // on the count regardless of transit delay.
        let window = Window { start: req.t_s, end: req.t_e };
        let slices = policy::pca_slices(
            window,
            req.timestamp,
            self.config.tau_p,
            self.config.gamma_p3,
            self.config.t_date,
        )
        .map_err(|e| match e {
            PolicyError::NoUsefulSlices => PcaError::NoUsefulSlices,
            _ => PcaError::InvalidWindow,
        })?;
        if req.keys.len() != slices.len() {
            return Err(PcaError::KeyCountMismatch {
                expected: slices.len() as u16,
                got: req.keys.len() as u16,
            });
        }

        // Single use: consume the ticket and allocate the serial block
        // atomically.
        let first_serial = {
            let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
            if !state.used_tickets.insert(ticket.serial) {
                return Err(PcaError::TicketAlreadyUsed);
            }
            let first = state.serial_counter;
            state.serial_counter += slices.len() as u64;
            first
        };

        let mut pseudonyms = Vec::with_capacity(slices.len());
        let mut rnd_iks = Vec::with_capacity(slices.len());
        for (i, (slice, key)) in slices.iter().zip(&req.keys).enumerate() {
            let mut rnd_bytes = [0u8; 32];
            self.rng.fill(&mut rnd_bytes);
            let rnd_ik = Rnd32(rnd_bytes);
            let ik_p = binding::pseudonym_ik(&ticket.ik_tkt, &key.public_key, *slice, &rnd_ik);
            let mut pseudonym = Pseudonym {
                serial: first_serial + i as u64,
                public_key: key.public_key.clone(),
                ik_p,
                t_s: slice.start,
                t_e: slice.end,
                signature: Signature([0; 64]),
            };
            pseudonym.signature = self.keys.private.sign(&codec::signed_payload(&pseudonym));
            pseudonyms.push(pseudonym);
            rnd_iks.push(rnd_ik);
        }

        let mut w = Writer::new();
        w.put_u8(REC_BATCH);
        w.put_u64(ticket.serial);
        w.put_raw(&ticket.ik_tkt.0);
        w.put_u16(pseudonyms.len() as u16);
        for (p, rnd) in pseudonyms.iter().zip(&rnd_iks) {
            w.put_u64(p.serial);
            w.put_raw(&rnd.0);
        }
        self.log
            .append(&w.into_bytes())
            .map_err(|e| PcaError::Storage(e.to_string()))?;

        {
            let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
            for (p, rnd) in pseudonyms.iter().zip(&rnd_iks) {
                state.issued.insert(
                    p.serial,
                    PsnymBinding {
                        rnd_ik: *rnd,
                        ticket_serial: ticket.serial,
                        ticket_ik: ticket.ik_tkt,
                    },
                );
            }
        }

        Ok(PsnymResponse {
            res_id: req.req_id,
            pseudonyms,
            rnd_iks,
            nonce_echo: req.nonce.wrapping_add(1),
            timestamp: now,
        })
    }

    /// Resolution support: reveal the binding material for an issued
    /// pseudonym.
    pub fn reveal_pseudonym_binding(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealPsnymResponse, PcaError> {
        if !self.config.ra_credential.matches(credential) {
            return Err(PcaError::Unauthorized);
        }
        let state = self.state.read().unwrap_or_else(|e| e.into_inner());
        let bound = state.issued.get(&serial).ok_or(PcaError::UnknownSerial)?;
        Ok(RevealPsnymResponse {
            rnd_ik: bound.rnd_ik,
            ticket_serial: bound.ticket_serial,
            ticket_ik: bound.ticket_ik,
        })
    }

    /// Number of pseudonyms issued so far (diagnostics).
    pub fn pseudonyms_issued(&self) -> u64 {
        self.state.read().unwrap_or_else(|e| e.into_inner()).serial_counter
    }
}
