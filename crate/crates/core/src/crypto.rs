//! ECDSA over NIST P-256 with SHA-256, plus hashing.
//!
//! Signing uses RFC 6979 deterministic nonces and low-s normalization, so a
//! (key, payload) pair always yields the same 64-byte r||s signature. Public
//! keys travel as 33-byte SEC1 compressed points.

use std::fmt;
use std::sync::Mutex;

use core::convert::Infallible;

use p256::ecdsa::signature::hazmat::PrehashVerifier;
use p256::ecdsa::signature::{Signer, Verifier};
use p256::ecdsa::{SigningKey, VerifyingKey};
use p256::elliptic_curve::scalar::IsHigh;
use p256::elliptic_curve::Generate;
use rand_core::{CryptoRng, Rng as _, TryCryptoRng, TryRng};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub const PUBLIC_KEY_LEN: usize = 33;
pub const SIGNATURE_LEN: usize = 64;
pub const DIGEST_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid public key point encoding")]
    InvalidPoint,
    #[error("invalid private scalar")]
    InvalidScalar,
    #[error("invalid signature encoding")]
    InvalidSignature,
    #[error("entropy source failed: {0}")]
    Entropy(String),
}

/// SHA-256 output.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; DIGEST_LEN]>::try_from(bytes).ok().map(Digest)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(self.0))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// SHA-256 of `payload`.
pub fn digest(payload: &[u8]) -> Digest {
    Digest(Sha256::digest(payload).into())
}

/// Incremental SHA-256 over multiple segments, for hash bindings built from
/// concatenated fields without intermediate allocation.
pub fn digest_parts(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// A P-256 public key, stored alongside its compressed SEC1 encoding so the
/// codec never re-derives it.
#[derive(Clone)]
pub struct PublicKey {
    bytes: [u8; PUBLIC_KEY_LEN],
    key: VerifyingKey,
}

impl PublicKey {
    pub fn from_sec1_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; PUBLIC_KEY_LEN] =
            bytes.try_into().map_err(|_| CryptoError::InvalidPoint)?;
        let key = VerifyingKey::from_sec1_bytes(bytes).map_err(|_| CryptoError::InvalidPoint)?;
        Ok(PublicKey { bytes: arr, key })
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.bytes
    }

    fn from_verifying_key(key: VerifyingKey) -> Self {
        let point = key.to_sec1_point(true);
        let bytes: [u8; PUBLIC_KEY_LEN] = point
            .as_bytes()
            .try_into()
            .expect("compressed P-256 point is 33 bytes");
        PublicKey { bytes, key }
    }

    /// Verify `sig` over `payload`. Total: malformed or mismatched inputs
    /// yield `false`, never a panic.
    pub fn verify(&self, payload: &[u8], sig: &Signature) -> bool {
        match sig.to_p256() {
            Ok(parsed) => self.key.verify(payload, &parsed).is_ok(),
            Err(_) => false,
        }
    }

    /// Verify against an externally computed SHA-256 digest.
    pub fn verify_prehash(&self, prehash: &Digest, sig: &Signature) -> bool {
        match sig.to_p256() {
            Ok(parsed) => self.key.verify_prehash(&prehash.0, &parsed).is_ok(),
            Err(_) => false,
        }
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.bytes == other.bytes
    }
}
impl Eq for PublicKey {}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(self.bytes))
    }
}

/// A P-256 private scalar with signing capability.
#[derive(Clone)]
pub struct PrivateKey {
    key: SigningKey,
}

impl PrivateKey {
    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, CryptoError> {
        let key = SigningKey::from_slice(bytes).map_err(|_| CryptoError::InvalidScalar)?;
        Ok(PrivateKey { key })
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.key.to_bytes().into()
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey::from_verifying_key(*self.key.verifying_key())
    }

    /// RFC 6979 deterministic ECDSA over SHA-256(payload), low-s normalized.
    pub fn sign(&self, payload: &[u8]) -> Signature {
        let sig: p256::ecdsa::Signature = self.key.sign(payload);
        Signature::from_p256(sig.normalize_s())
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

/// Public/private key pair. The invariant `public = private · G` holds by
/// construction for every constructor here.
#[derive(Clone, Debug)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

impl KeyPair {
    pub fn from_private(private: PrivateKey) -> Self {
        KeyPair { public: private.public_key(), private }
    }

    pub fn from_private_bytes(bytes: &[u8; 32]) -> Result<Self, CryptoError> {
        Ok(Self::from_private(PrivateKey::from_bytes(bytes)?))
    }
}

/// Generate a fresh P-256 key pair from the given RNG.
pub fn generate_keypair<R: CryptoRng + ?Sized>(rng: &mut R) -> KeyPair {
    let key = SigningKey::generate_from_rng(rng);
    KeyPair::from_private(PrivateKey { key })
}

/// Generate a fresh P-256 key pair from the operating system RNG, surfacing
/// entropy failure instead of panicking.
pub fn generate_keypair_os() -> Result<KeyPair, CryptoError> {
    struct TrySys;
    impl TryRng for TrySys {
        type Error = getrandom::Error;
        fn try_next_u32(&mut self) -> Result<u32, Self::Error> {
            getrandom::u32()
        }
        fn try_next_u64(&mut self) -> Result<u64, Self::Error> {
            getrandom::u64()
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Self::Error> {
            getrandom::fill(dest)
        }
    }
    impl TryCryptoRng for TrySys {}

    let key = SigningKey::try_generate_from_rng(&mut TrySys)
        .map_err(|e| CryptoError::Entropy(e.to_string()))?;
    Ok(KeyPair::from_private(PrivateKey { key }))
}

/// Fixed 64-byte big-endian r||s ECDSA signature.
///
/// `from_bytes` accepts any 64 bytes; range and low-s checks happen when the
/// signature is actually used, so decoding adversarial input cannot fail
/// differently from verification.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

impl Signature {
    pub fn from_bytes(bytes: [u8; SIGNATURE_LEN]) -> Self {
        Signature(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; SIGNATURE_LEN]>::try_from(bytes).ok().map(Signature)
    }

    pub fn as_bytes(&self) -> &[u8; SIGNATURE_LEN] {
        &self.0
    }

    pub fn r_bytes(&self) -> &[u8] {
        &self.0[..32]
    }

    pub fn s_bytes(&self) -> &[u8] {
        &self.0[32..]
    }

    fn from_p256(sig: p256::ecdsa::Signature) -> Self {
        let bytes: [u8; SIGNATURE_LEN] = sig.to_bytes().into();
        Signature(bytes)
    }

    /// Parse into the arithmetic form, rejecting out-of-range scalars and
    /// non-normalized (high-s) values.
    fn to_p256(self) -> Result<p256::ecdsa::Signature, CryptoError> {
        let sig = p256::ecdsa::Signature::from_slice(&self.0)
            .map_err(|_| CryptoError::InvalidSignature)?;
        if sig.s().is_high().into() {
            return Err(CryptoError::InvalidSignature);
        }
        Ok(sig)
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}..)", hex::encode(&self.0[..8]))
    }
}

/// Operating-system entropy as an infallible `CryptoRng`.
///
/// Panics only if the OS RNG is unavailable, which `getrandom` treats as a
/// fatal platform misconfiguration; use `generate_keypair_os` for the
/// fallible path.
#[derive(Clone, Copy, Debug, Default)]
pub struct SystemEntropy;

impl TryRng for SystemEntropy {
    type Error = Infallible;

    fn try_next_u32(&mut self) -> Result<u32, Infallible> {
        Ok(getrandom::u32().expect("OS entropy source failed"))
    }

    fn try_next_u64(&mut self) -> Result<u64, Infallible> {
        Ok(getrandom::u64().expect("OS entropy source failed"))
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Infallible> {
        getrandom::fill(dest).expect("OS entropy source failed");
        Ok(())
    }
}

impl TryCryptoRng for SystemEntropy {}

/// A shareable, internally synchronized entropy source for services that
/// draw randomness from concurrent request handlers.
pub struct SharedRng(Mutex<Box<dyn CryptoRngSend>>);

/// Object-safe alias for `CryptoRng + Send`.
pub trait CryptoRngSend: CryptoRng + Send {}
impl<T: CryptoRng + Send> CryptoRngSend for T {}

impl SharedRng {
    pub fn new<R: CryptoRng + Send + 'static>(rng: R) -> Self {
        SharedRng(Mutex::new(Box::new(rng)))
    }

    pub fn system() -> Self {
        Self::new(SystemEntropy)
    }

    pub fn fill(&self, dest: &mut [u8]) {
        let mut guard = self.0.lock().unwrap_or_else(|e| e.into_inner());
        guard.fill_bytes(dest);
    }

    pub fn next_u64(&self) -> u64 {
        let mut guard = self.0.lock().unwrap_or_else(|e| e.into_inner());
        guard.next_u64()
    }

    pub fn generate_keypair(&self) -> KeyPair {
        let mut guard = self.0.lock().unwrap_or_else(|e| e.into_inner());
        generate_keypair(guard.as_mut())
    }
}

impl fmt::Debug for SharedRng {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedRng(..)")
    }
}
