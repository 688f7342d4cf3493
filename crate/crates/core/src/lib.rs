//! Vehicular PKI credential issuance.
//!
//! A Long-Term CA (LTCA) registers vehicles and issues service-granting
//! tickets; a Pseudonym CA (PCA) issues batches of short-term pseudonym
//! certificates with consecutive, non-overlapping lifetimes against those
//! tickets; a Resolution Authority can walk the identifiable-key hash chain
//! back from a pseudonym to the issuing LTC with both authorities'
//! cooperation. Vehicles acquire pseudonyms on demand under one of three
//! policies (per-trip, fixed-interval, or globally grid-aligned).
//!
//! This crate holds the protocol logic, domain types, wire codec, policy
//! engine, trace tooling, and latency statistics; TLS transport and the
//! benchmark harness live in their own crates.

pub mod clock;
pub mod codec;
pub mod crypto;
pub mod loopback;
pub mod ltca;
pub mod model;
pub mod obu;
pub mod pca;
pub mod policy;
pub mod resolution;
pub mod stats;
pub mod store;
pub mod testkit;
pub mod time;
pub mod trace;
pub mod transport;
