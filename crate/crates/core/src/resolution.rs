//! Resolution Authority: given a pseudonym, walk the identifiable-key chain
//! back to the issuing LTC, verifying both hash bindings so that neither a
//! compromised PCA nor a compromised LTCA can substitute a different ticket
//! or LTC undetected.

use thiserror::Error;

use crate::codec;
use crate::crypto::{digest, Digest};
use crate::model::*;
use crate::transport::{LtcaRevealChannel, PcaRevealChannel, TransportError};
use crate::time::Window;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Which link of the chain a mismatch was detected on.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum ChainLink {
    /// pseudonym -> ticket binding revealed by the PCA
    Pca,
    /// ticket -> LTC binding revealed by the LTCA
    Ltca,
}

/// One recomputed hash binding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinkCheck {
    pub link: ChainLink,
    pub expected: Digest,
    pub recomputed: Digest,
}

impl LinkCheck {
    pub fn ok(&self) -> bool {
        self.expected == self.recomputed
    }
}

/// Outcome of a resolution: the recovered identifiers plus per-link detail.
/// `chain_valid` holds exactly when both recomputations match.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ResolutionResult {
    pub pseudonym_serial: u64,
    pub ticket_serial: u64,
    pub ltc_digest: Digest,
    pub pca_link: LinkCheck,
    pub ltca_link: LinkCheck,
}

impl ResolutionResult {
    pub fn chain_valid(&self) -> bool {
        self.pca_link.ok() && self.ltca_link.ok()
    }

    /// The first broken link, if any.
    pub fn mismatch(&self) -> Option<ChainLink> {
        if !self.pca_link.ok() {
            Some(ChainLink::Pca)
        } else if !self.ltca_link.ok() {
            Some(ChainLink::Ltca)
        } else {
            None
        }
    }
}

/// Resolve a pseudonym to its issuing LTC. Fetches the pseudonym binding
/// from the PCA and recomputes `H(ik_tkt || K || t_s || t_e || rnd_ik)`
/// against the pseudonym's identifiable key, then fetches the ticket
/// binding from the LTCA and recomputes `H(LTC || t_s || t_e ||
/// rnd_ik_tkt)` against the revealed ticket identifiable key. Both links
/// are always checked so the report carries full detail.
pub fn resolve(
    pseudonym: &Pseudonym,
    pca: &dyn PcaRevealChannel,
    ltca: &dyn LtcaRevealChannel,
    credential: &RaCredential,
) -> Result<ResolutionResult, ResolveError> {
    let psnym_binding = pca.reveal_pseudonym(pseudonym.serial, credential)?;
    let recomputed_ik_p = binding::pseudonym_ik(
        &psnym_binding.ticket_ik,
        &pseudonym.public_key,
        pseudonym.lifetime(),
        &psnym_binding.rnd_ik,
    );
    let pca_link = LinkCheck {
        link: ChainLink::Pca,
        expected: pseudonym.ik_p,
        recomputed: recomputed_ik_p,
    };

    let ticket_binding = ltca.reveal_ticket(psnym_binding.ticket_serial, credential)?;
    let ltc_encoding = codec::encode(&ticket_binding.ltc);
    let recomputed_ik_tkt = binding::ticket_ik(
        &ltc_encoding,
        Window { start: ticket_binding.t_s, end: ticket_binding.t_e },
        &ticket_binding.rnd_ik_tkt,
    );
    // The revealed digest must also be the digest of the revealed LTC;
    // otherwise the LTCA is equivocating about which certificate it bound.
    let ltca_link = if digest(&ltc_encoding) == ticket_binding.ltc_digest {
        LinkCheck {
            link: ChainLink::Ltca,
            expected: psnym_binding.ticket_ik,
            recomputed: recomputed_ik_tkt,
        }
    } else {
        LinkCheck {
            link: ChainLink::Ltca,
            expected: ticket_binding.ltc_digest,
            recomputed: digest(&ltc_encoding),
        }
    };

    Ok(ResolutionResult {
        pseudonym_serial: pseudonym.serial,
        ticket_serial: psnym_binding.ticket_serial,
        ltc_digest: ticket_binding.ltc_digest,
        pca_link,
        ltca_link,
    })
}
