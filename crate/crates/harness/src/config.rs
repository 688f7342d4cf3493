//! On-disk configuration for the service binaries and helpers shared by
//! the CLIs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vpki_core::crypto::{KeyPair, PublicKey};
use vpki_core::model::{IdString, RaCredential};
use vpki_core::time::{DurMs, TimeMs};

/// Simulated-clock parameters shared between the benchmark driver and
/// separately launched servers. Without it, servers run on wall time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClockSpec {
    pub origin_ms: u64,
    pub factor: f64,
    pub anchor_wall_ms: u64,
}

impl ClockSpec {
    pub fn build(&self) -> vpki_core::clock::SimClock {
        vpki_core::clock::SimClock::anchored(
            TimeMs(self.origin_ms),
            self.factor,
            TimeMs(self.anchor_wall_ms),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TlsSection {
    /// Directory holding ca.pem plus per-service cert/key pairs.
    pub dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LtcaFileConfig {
    pub issuer_id: String,
    pub listen: String,
    /// Hex-encoded 32-byte P-256 scalar.
    pub key_file: PathBuf,
    /// Append-only state log.
    pub state_file: PathBuf,
    pub skew_secs: Option<u64>,
    pub grace_secs: Option<u64>,
    pub max_window_secs: Option<u64>,
    pub ra_credential_hex: String,
    pub tls: TlsSection,
    pub clock: Option<ClockSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrustEntry {
    pub issuer_id: String,
    pub public_key_hex: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaFileConfig {
    pub pca_id: String,
    pub listen: String,
    pub key_file: PathBuf,
    pub state_file: PathBuf,
    pub tau_secs: u64,
    pub gamma_secs: u64,
    /// Midnight anchor of the P3 grid, ms since the epoch.
    pub t_date_ms: u64,
    pub skew_secs: Option<u64>,
    pub ra_credential_hex: String,
    pub trust: Vec<TrustEntry>,
    pub tls: TlsSection,
    pub clock: Option<ClockSpec>,
}

pub fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse_credential(hex_str: &str) -> Result<RaCredential> {
    let bytes = hex::decode(hex_str.trim()).context("RA credential must be hex")?;
    let arr: [u8; 32] = bytes
        .as_slice()
        .try_into()
        .map_err(|_| anyhow::anyhow!("RA credential must be 32 bytes"))?;
    Ok(RaCredential(arr))
}

pub fn load_keypair(path: &Path) -> Result<KeyPair> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading key file {}", path.display()))?;
    let bytes = hex::decode(text.trim()).context("key file must be hex")?;
    let arr: [u8; 32] =
        bytes.as_slice().try_into().map_err(|_| anyhow::anyhow!("key must be 32 bytes"))?;
    KeyPair::from_private_bytes(&arr).map_err(|e| anyhow::anyhow!("invalid key: {e}"))
}

pub fn save_keypair(path: &Path, keys: &KeyPair) -> Result<()> {
    std::fs::write(path, hex::encode(keys.private.to_bytes()))
        .with_context(|| format!("writing key file {}", path.display()))
}

pub fn parse_public_key(hex_str: &str) -> Result<PublicKey> {
    let bytes = hex::decode(hex_str.trim()).context("public key must be hex")?;
    PublicKey::from_sec1_bytes(&bytes).map_err(|e| anyhow::anyhow!("invalid public key: {e}"))
}

pub fn id_string(s: &str) -> Result<IdString> {
    IdString::new(s).map_err(|e| anyhow::anyhow!("invalid identifier {s:?}: {e}"))
}

pub fn trust_store(entries: &[TrustEntry]) -> Result<HashMap<IdString, PublicKey>> {
    let mut store = HashMap::new();
    for entry in entries {
        store.insert(id_string(&entry.issuer_id)?, parse_public_key(&entry.public_key_hex)?);
    }
    if store.is_empty() {
        bail!("trust store must contain at least one LTCA");
    }
    Ok(store)
}

pub fn secs_or(value: Option<u64>, default_secs: u64) -> DurMs {
    DurMs::from_secs(value.unwrap_or(default_secs))
}
