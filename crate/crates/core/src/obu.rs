//! Vehicle-side (OBU) client: builds ticket and pseudonym requests,
//! validates every response defensively, manages the non-overlapping
//! pseudonym store, and executes per-trip acquisition schedules.

use std::collections::VecDeque;
use std::time::Instant;

use thiserror::Error;

use crate::clock::Clock;
use crate::codec;
use crate::crypto::{KeyPair, PrivateKey, PublicKey, SharedRng};
use crate::model::*;
use crate::policy::{self, PolicyConfig, PolicyError, PolicyKind, TripRecord};
use crate::stats::{LatencyRecord, Outcome};
use crate::time::{DurMs, TimeMs, Window};
use crate::transport::{LtcaChannel, PcaChannel, TransportError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("peer violated the protocol: {0}")]
    ProtocolViolation(&'static str),
    #[error("response failed validation: {0}")]
    ValidationFailure(&'static str),
    #[error("pseudonymous key pool exhausted")]
    PoolExhausted,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl ClientError {
    /// Outcome code for latency records; server errors keep their own wire
    /// code.
    pub fn outcome_code(&self) -> u16 {
        match self {
            ClientError::Transport(TransportError::Server { code, .. }) => *code,
            ClientError::Transport(TransportError::Io(_)) => 901,
            ClientError::Transport(TransportError::Codec(_)) => 902,
            ClientError::Transport(TransportError::UnexpectedMessage) => 902,
            ClientError::ProtocolViolation(_) => 903,
            ClientError::ValidationFailure(_) => 904,
            ClientError::PoolExhausted => 905,
            ClientError::Policy(_) => 906,
        }
    }
}

/// A pre-generated pseudonymous key with its proof-of-possession signature.
/// Pool filling happens off the measured path, mirroring offline key
/// generation on the OBU.
#[derive(Clone, Debug)]
pub struct PooledKey {
    pub keypair: KeyPair,
    pub pop: SelfSignedKey,
}

impl PooledKey {
    pub fn generate(rng: &SharedRng) -> Self {
        let keypair = rng.generate_keypair();
        let pop = SelfSignedKey::create(&keypair);
        PooledKey { keypair, pop }
    }
}

/// An installed pseudonym with its private key and the PCA's IK blinding
/// value (kept for dispute/resolution support).
#[derive(Clone, Debug)]
pub struct StoredPseudonym {
    pub pseudonym: Pseudonym,
    pub private: PrivateKey,
    pub rnd_ik: Rnd32,
}

/// Report for one completed acquisition.
#[derive(Debug)]
pub struct AcquireReport {
    pub n_pseudonyms: u32,
    pub e2e_wall: std::time::Duration,
}

/// Everything a vehicle needs to participate: its LTC and long-term keys,
/// the policy it runs, the PCA parameters learned from `get_config`, a
/// pre-filled key pool, and the pseudonym store.
pub struct VehicleContext {
    pub ltc: LongTermCertificate,
    ltc_keys: KeyPair,
    ltca_key: PublicKey,
    pub policy: PolicyConfig,
    pub pca_info: ConfigResponse,
    /// Freshness bound applied to response timestamps. Under compressed
    /// simulated time this must scale with the compression factor.
    pub skew: DurMs,
    rng: SharedRng,
    key_pool: VecDeque<PooledKey>,
    store: Vec<StoredPseudonym>,
}

impl VehicleContext {
    pub fn new(
        ltc: LongTermCertificate,
        ltc_keys: KeyPair,
        ltca_key: PublicKey,
        policy: PolicyConfig,
        pca_info: ConfigResponse,
        rng: SharedRng,
    ) -> Self {
        VehicleContext {
            ltc,
            ltc_keys,
            ltca_key,
            policy,
            pca_info,
            skew: DurMs::from_secs(60),
            rng,
            key_pool: VecDeque::new(),
            store: Vec::new(),
        }
    }

    /// Derive the vehicle's policy configuration from PCA parameters. P2
    /// uses the PCA's gamma as its refill interval unless overridden.
    pub fn policy_from_pca(kind: PolicyKind, pca_info: &ConfigResponse) -> PolicyConfig {
        PolicyConfig {
            kind,
            gamma: DurMs(pca_info.gamma_p3.as_millis()),
            tau_p: DurMs(pca_info.tau_p.as_millis()),
            t_date: pca_info.t_date,
        }
    }

    pub fn pool_len(&self) -> usize {
        self.key_pool.len()
    }

    /// Pre-generate `n` self-signed keys (offline step; excluded from
    /// measured latency).
    pub fn fill_pool(&mut self, n: usize) {
        for _ in 0..n {
            self.key_pool.push_back(PooledKey::generate(&self.rng));
        }
    }

    /// Exact number of keys the trip will consume if every trigger fires on
    /// time; late firing only ever reduces the need (expired slices are
    /// dropped, never added).
    pub fn pool_requirement(
        &self,
        trip: &TripRecord,
        estimated_duration: Option<DurMs>,
    ) -> Result<usize, PolicyError> {
        let planned = planned_trip(trip, estimated_duration, self.policy.kind);
        let schedule = policy::compute_schedule(&self.policy, &planned)?;
        let mut total = 0;
        for entry in &schedule.entries {
            total += self.expected_slices(entry.window, entry.trigger)?.len();
        }
        if let Some(residual) = residual_window(trip, estimated_duration, self.policy.kind) {
            total += self.expected_slices(residual, residual.start)?.len();
        }
        Ok(total)
    }

    /// The slicing the PCA will apply to this window at time `at`.
    fn expected_slices(&self, window: Window, at: TimeMs) -> Result<Vec<Window>, PolicyError> {
        policy::pca_slices(
            window,
            at,
            DurMs(self.pca_info.tau_p.as_millis()),
            DurMs(self.pca_info.gamma_p3.as_millis()),
            self.pca_info.t_date,
        )
    }

    /// Protocol: build a ticket request for `window`, concealing the PCA
    /// identity behind a fresh commitment, signed with the LTC key.
    pub fn build_ticket_request(&mut self, window: Window, now: TimeMs) -> (TicketRequest, Rnd32) {
        let mut rnd = [0u8; 32];
        self.rng.fill(&mut rnd);
        let rnd_tkt = Rnd32(rnd);
        let mut req = TicketRequest {
            req_id: self.rng.next_u64(),
            pca_commitment: binding::pca_commitment(&self.pca_info.pca_id, &rnd_tkt),
            t_s: window.start,
            t_e: window.end,
            ltc: self.ltc.clone(),
            nonce: self.rng.next_u64(),
            timestamp: now,
            signature: crate::crypto::Signature([0; 64]),
        };
        req.signature = self.ltc_keys.private.sign(&codec::signed_payload(&req));
        (req, rnd_tkt)
    }

    /// Validate a ticket response against the request that produced it:
    /// nonce echo, freshness, LTCA signature, window equality, and the
    /// recomputable ticket identifiable key.
    pub fn validate_ticket_response(
        &self,
        req: &TicketRequest,
        rnd_tkt: &Rnd32,
        res: &TicketResponse,
        now: TimeMs,
    ) -> Result<(), ClientError> {
        if res.nonce_echo != req.nonce.wrapping_add(1) {
            return Err(ClientError::ProtocolViolation("ticket response nonce echo"));
        }
        if now.abs_diff(res.timestamp) > self.skew {
            return Err(ClientError::ProtocolViolation("ticket response timestamp"));
        }
        let ticket = &res.ticket;
        if !self.ltca_key.verify(&codec::signed_payload(ticket), &ticket.signature) {
            return Err(ClientError::ValidationFailure("ticket signature"));
        }
        if ticket.t_s != req.t_s || ticket.t_e != req.t_e {
            return Err(ClientError::ValidationFailure("ticket window mismatch"));
        }
        if ticket.pca_commitment != binding::pca_commitment(&self.pca_info.pca_id, rnd_tkt) {
            return Err(ClientError::ValidationFailure("ticket commitment mismatch"));
        }
        let expected_ik = binding::ticket_ik(
            &codec::encode(&self.ltc),
            ticket.window(),
            &res.rnd_ik_tkt,
        );
        if ticket.ik_tkt != expected_ik {
            return Err(ClientError::ValidationFailure("ticket identifiable key"));
        }
        Ok(())
    }

    /// Protocol: build a pseudonym request from a validated ticket
    /// exchange, drawing one pooled key per expected lifetime slice.
    pub fn build_psnym_request(
        &mut self,
        ticket: &Ticket,
        rnd_tkt: Rnd32,
        window: Window,
        now: TimeMs,
    ) -> Result<(PsnymRequest, Vec<PooledKey>), ClientError> {
        let slices = self.expected_slices(window, now)?;
        if self.key_pool.len() < slices.len() {
            return Err(ClientError::PoolExhausted);
        }
        let keys: Vec<PooledKey> = self.key_pool.drain(..slices.len()).collect();
        let req = PsnymRequest {
            req_id: self.rng.next_u64(),
            rnd_tkt,
            t_s: window.start,
            t_e: window.end,
            ticket: ticket.clone(),
            keys: keys.iter().map(|k| k.pop.clone()).collect(),
            nonce: self.rng.next_u64(),
            timestamp: now,
        };
        Ok((req, keys))
    }

    /// Validate a pseudonym response: nonce echo, freshness, counts, slice
    /// continuity against the expected slicing, key binding, PCA signatures,
    /// and recomputable pseudonym identifiable keys.
    fn validate_psnym_response(
        &self,
        req: &PsnymRequest,
        keys: &[PooledKey],
        res: &PsnymResponse,
        now: TimeMs,
    ) -> Result<Vec<StoredPseudonym>, ClientError> {
        if res.nonce_echo != req.nonce.wrapping_add(1) {
            return Err(ClientError::ProtocolViolation("pseudonym response nonce echo"));
        }
        if now.abs_diff(res.timestamp) > self.skew {
            return Err(ClientError::ProtocolViolation("pseudonym response timestamp"));
        }
        if res.pseudonyms.len() != res.rnd_iks.len() {
            return Err(ClientError::ProtocolViolation("rnd_ik count mismatch"));
        }
        if res.pseudonyms.len() != keys.len() {
            return Err(ClientError::ValidationFailure("pseudonym count mismatch"));
        }
        let slices = self.expected_slices(req.window(), req.timestamp)?;
        if slices.len() != res.pseudonyms.len() {
            return Err(ClientError::ValidationFailure("slice count mismatch"));
        }
        let mut installed = Vec::with_capacity(keys.len());
        for (i, ((pseudonym, rnd_ik), key)) in
            res.pseudonyms.iter().zip(&res.rnd_iks).zip(keys).enumerate()
        {
            if pseudonym.public_key != key.keypair.public {
                return Err(ClientError::ValidationFailure("pseudonym key binding"));
            }
            if pseudonym.lifetime() != slices[i] {
                return Err(ClientError::ValidationFailure("pseudonym lifetime slice"));
            }
            if !self
                .pca_info
                .public_key
                .verify(&codec::signed_payload(pseudonym), &pseudonym.signature)
            {
                return Err(ClientError::ValidationFailure("pseudonym signature"));
            }
            let expected_ik = binding::pseudonym_ik(
                &req.ticket.ik_tkt,
                &pseudonym.public_key,
                pseudonym.lifetime(),
                rnd_ik,
            );
            if pseudonym.ik_p != expected_ik {
                return Err(ClientError::ValidationFailure("pseudonym identifiable key"));
            }
            installed.push(StoredPseudonym {
                pseudonym: pseudonym.clone(),
                private: key.keypair.private.clone(),
                rnd_ik: *rnd_ik,
            });
        }
        Ok(installed)
    }

    /// Install validated pseudonyms, preserving the store invariant: sorted
    /// by start, pairwise non-overlapping. All-or-nothing.
    fn install(&mut self, batch: Vec<StoredPseudonym>) -> Result<(), ClientError> {
        for pair in batch.windows(2) {
            if pair[0].pseudonym.lifetime().overlaps(&pair[1].pseudonym.lifetime()) {
                return Err(ClientError::ValidationFailure("overlapping lifetimes in batch"));
            }
        }
        for stored in &batch {
            let lifetime = stored.pseudonym.lifetime();
            let pos = self.store.partition_point(|s| s.pseudonym.t_s < lifetime.start);
            if pos > 0 && self.store[pos - 1].pseudonym.lifetime().overlaps(&lifetime) {
                return Err(ClientError::ValidationFailure("overlap with stored pseudonym"));
            }
            if pos < self.store.len() && self.store[pos].pseudonym.lifetime().overlaps(&lifetime) {
                return Err(ClientError::ValidationFailure("overlap with stored pseudonym"));
            }
        }
        for stored in batch {
            let pos = self.store.partition_point(|s| s.pseudonym.t_s < stored.pseudonym.t_s);
            self.store.insert(pos, stored);
        }
        Ok(())
    }

    /// End-to-end acquisition: Protocols 1 through 4 for one window.
    /// Returns the validated pseudonym count and the wall-clock latency
    /// (connection setup included, pool filling excluded).
    pub fn acquire(
        &mut self,
        window: Window,
        clock: &dyn Clock,
        ltca: &dyn LtcaChannel,
        pca: &dyn PcaChannel,
    ) -> Result<AcquireReport, ClientError> {
        let started = Instant::now();

        let now = clock.now();
        let (ticket_req, rnd_tkt) = self.build_ticket_request(window, now);
        let ticket_res = ltca.request_ticket(&ticket_req)?;
        self.validate_ticket_response(&ticket_req, &rnd_tkt, &ticket_res, clock.now())?;

        // Re-sample the clock: under compressed time the first exchange can
        // consume meaningful simulated time.
        let now = clock.now();
        let (psnym_req, keys) =
            self.build_psnym_request(&ticket_res.ticket, rnd_tkt, window, now)?;
        let psnym_res = pca.request_pseudonyms(&psnym_req)?;
        let installed = self.validate_psnym_response(&psnym_req, &keys, &psnym_res, clock.now())?;

        let n = installed.len() as u32;
        self.install(installed)?;
        Ok(AcquireReport { n_pseudonyms: n, e2e_wall: started.elapsed() })
    }

    /// The pseudonym valid at `t`, if any. At most one exists by the store
    /// invariant.
    pub fn current_pseudonym(&self, t: TimeMs) -> Option<&StoredPseudonym> {
        let pos = self.store.partition_point(|s| s.pseudonym.t_s <= t);
        if pos == 0 {
            return None;
        }
        let candidate = &self.store[pos - 1];
        candidate.pseudonym.lifetime().contains(t).then_some(candidate)
    }

    pub fn pseudonym_store(&self) -> &[StoredPseudonym] {
        &self.store
    }

    /// Execute the trip's acquisition schedule against the given clock. One
    /// latency record per acquisition; under P1 with an under-estimated
    /// duration a flagged residual re-request covers the remainder.
    pub fn run_trip(
        &mut self,
        trip: &TripRecord,
        estimated_duration: Option<DurMs>,
        clock: &dyn Clock,
        ltca: &dyn LtcaChannel,
        pca: &dyn PcaChannel,
    ) -> Result<Vec<LatencyRecord>, PolicyError> {
        let planned = planned_trip(trip, estimated_duration, self.policy.kind);
        let schedule = policy::compute_schedule(&self.policy, &planned)?;
        let mut records = Vec::with_capacity(schedule.len());
        for entry in &schedule.entries {
            clock.wait_until(entry.trigger);
            records.push(self.measured_acquire(trip, entry.trigger, entry.window, false, clock, ltca, pca));
        }
        if let Some(residual) = residual_window(trip, estimated_duration, self.policy.kind) {
            clock.wait_until(residual.start);
            records.push(self.measured_acquire(trip, residual.start, residual, true, clock, ltca, pca));
        }
        Ok(records)
    }

    fn measured_acquire(
        &mut self,
        trip: &TripRecord,
        trigger: TimeMs,
        window: Window,
        residual: bool,
        clock: &dyn Clock,
        ltca: &dyn LtcaChannel,
        pca: &dyn PcaChannel,
    ) -> LatencyRecord {
        let (outcome, n, e2e_ms) = match self.acquire(window, clock, ltca, pca) {
            Ok(report) => (
                if residual { Outcome::OkResidual } else { Outcome::Ok },
                report.n_pseudonyms,
                report.e2e_wall.as_secs_f64() * 1000.0,
            ),
            Err(err) => (Outcome::Err(err.outcome_code()), 0, 0.0),
        };
        LatencyRecord {
            vehicle_id: trip.vehicle_id.clone(),
            trigger,
            e2e_ms,
            policy: self.policy.kind,
            n_pseudonyms: n,
            outcome,
        }
    }
}

/// The trip as planned: P1 plans against the estimated duration, P2/P3
/// always react to the real one.
fn planned_trip(trip: &TripRecord, estimate: Option<DurMs>, kind: PolicyKind) -> TripRecord {
    match (kind, estimate) {
        (PolicyKind::P1, Some(est)) => TripRecord { duration: est.min(trip.duration), ..trip.clone() },
        _ => trip.clone(),
    }
}

/// The uncovered tail of a P1 trip whose estimate fell short.
fn residual_window(trip: &TripRecord, estimate: Option<DurMs>, kind: PolicyKind) -> Option<Window> {
    match (kind, estimate) {
        (PolicyKind::P1, Some(est)) if est < trip.duration => Some(Window {
            start: trip.depart + est,
            end: trip.depart + trip.duration,
        }),
        _ => None,
    }
}
