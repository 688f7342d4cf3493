//! Deterministic protocol fixtures for tests and conformance suites. Key
//! material uses tiny fixed scalars and all randomness is pinned, so every
//! derived byte (including signatures, via deterministic nonces) is stable.

use crate::codec;
use crate::crypto::{KeyPair, Signature};
use crate::model::*;
use crate::time::{DurMs, TimeMs, Window};

/// 2016-06-01T00:00:00Z, a midnight anchor.
pub const DAY: TimeMs = TimeMs(1_464_739_200_000);

pub fn at_secs(s: u64) -> TimeMs {
    DAY + DurMs::from_secs(s)
}

/// Key pair from a tiny fixed scalar.
pub fn test_keypair(k: u8) -> KeyPair {
    let mut scalar = [0u8; 32];
    scalar[31] = k;
    KeyPair::from_private_bytes(&scalar).unwrap()
}

pub fn ltca_keys() -> KeyPair {
    test_keypair(1)
}

pub fn pca_keys() -> KeyPair {
    test_keypair(2)
}

pub fn vehicle_keys() -> KeyPair {
    test_keypair(3)
}

pub fn issuer_id() -> IdString {
    IdString::new("ltca.example").unwrap()
}

pub fn pca_id() -> IdString {
    IdString::new("pca.example").unwrap()
}

pub fn rnd_tkt() -> Rnd32 {
    Rnd32([0xAA; 32])
}

pub fn rnd_ik_tkt() -> Rnd32 {
    Rnd32([0xBB; 32])
}

pub fn rnd_ik(i: u8) -> Rnd32 {
    Rnd32([0xC0 + i; 32])
}

pub fn credential() -> RaCredential {
    RaCredential([0x5C; 32])
}

/// A consistent family of protocol messages: the ticket really binds the
/// LTC, the pseudonyms really bind the ticket, and every signature
/// verifies.
pub struct Fixtures {
    pub ltc: LongTermCertificate,
    pub ticket: Ticket,
    pub pseudonyms: Vec<Pseudonym>,
    pub psnym_keys: Vec<KeyPair>,
    pub ticket_request: TicketRequest,
    pub ticket_response: TicketResponse,
    pub psnym_request: PsnymRequest,
    pub psnym_response: PsnymResponse,
}

pub fn fixtures() -> Fixtures {
    let ltca = ltca_keys();
    let pca = pca_keys();
    let vehicle = vehicle_keys();

    let mut ltc = LongTermCertificate {
        subject_id: SubjectId([0x11; 16]),
        public_key: vehicle.public.clone(),
        valid_from: DAY,
        valid_to: DAY + DurMs::from_secs(365 * 24 * 3600),
        issuer_id: issuer_id(),
        signature: Signature([0; 64]),
    };
    ltc.signature = ltca.private.sign(&codec::signed_payload(&ltc));

    // Ticket for [08:00:00, 08:01:00): two 30 s slices.
    let window = Window { start: at_secs(8 * 3600), end: at_secs(8 * 3600 + 60) };
    let ik_tkt = binding::ticket_ik(&codec::encode(&ltc), window, &rnd_ik_tkt());
    let mut ticket = Ticket {
        serial: 42,
        pca_commitment: binding::pca_commitment(&pca_id(), &rnd_tkt()),
        ik_tkt,
        t_s: window.start,
        t_e: window.end,
        exp_tkt: window.end + DurMs::from_secs(60),
        signature: Signature([0; 64]),
    };
    ticket.signature = ltca.private.sign(&codec::signed_payload(&ticket));

    let mut ticket_request = TicketRequest {
        req_id: 7,
        pca_commitment: ticket.pca_commitment,
        t_s: window.start,
        t_e: window.end,
        ltc: ltc.clone(),
        nonce: 1000,
        timestamp: window.start,
        signature: Signature([0; 64]),
    };
    ticket_request.signature = vehicle.private.sign(&codec::signed_payload(&ticket_request));

    let ticket_response = TicketResponse {
        res_id: 7,
        ticket: ticket.clone(),
        rnd_ik_tkt: rnd_ik_tkt(),
        nonce_echo: 1001,
        timestamp: window.start,
    };

    let psnym_keys: Vec<KeyPair> = (0..2).map(|i| test_keypair(10 + i)).collect();
    let self_signed: Vec<SelfSignedKey> = psnym_keys.iter().map(SelfSignedKey::create).collect();

    let psnym_request = PsnymRequest {
        req_id: 8,
        rnd_tkt: rnd_tkt(),
        t_s: window.start,
        t_e: window.end,
        ticket: ticket.clone(),
        keys: self_signed,
        nonce: 2000,
        timestamp: window.start,
    };

    let tau = DurMs::from_secs(30);
    let mut pseudonyms = Vec::new();
    let mut rnd_iks = Vec::new();
    for (i, keys) in psnym_keys.iter().enumerate() {
        let slice = Window {
            start: window.start + tau * i as u64,
            end: window.start + tau * (i as u64 + 1),
        };
        let rnd = rnd_ik(i as u8);
        let mut p = Pseudonym {
            serial: 100 + i as u64,
            public_key: keys.public.clone(),
            ik_p: binding::pseudonym_ik(&ticket.ik_tkt, &keys.public, slice, &rnd),
            t_s: slice.start,
            t_e: slice.end,
            signature: Signature([0; 64]),
        };
        p.signature = pca.private.sign(&codec::signed_payload(&p));
        pseudonyms.push(p);
        rnd_iks.push(rnd);
    }

    let psnym_response = PsnymResponse {
        res_id: 8,
        pseudonyms: pseudonyms.clone(),
        rnd_iks,
        nonce_echo: 2001,
        timestamp: window.start,
    };

    Fixtures {
        ltc,
        ticket,
        pseudonyms,
        psnym_keys,
        ticket_request,
        ticket_response,
        psnym_request,
        psnym_response,
    }
}
