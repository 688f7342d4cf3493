//! TLS transport for the VPKI services: certificate tooling, length-prefixed
//! framing, tokio servers for the LTCA and PCA, and blocking client channels
//! implementing the core transport traits.

pub mod client;
pub mod frame;
pub mod server;
pub mod tls;
