//! TLS material and configuration for the service channels.
//!
//! The vehicle-LTCA channel is mutually authenticated; the vehicle-PCA
//! channel authenticates the server only. Certificates come from a local
//! deployment CA generated with `rcgen`; the application-layer credentials
//! (LTCs, tickets) are entirely separate from these transport certificates.

use std::path::Path;
use std::sync::Arc;

use rcgen::{
    BasicConstraints, CertificateParams, CertifiedIssuer, ExtendedKeyUsagePurpose, IsCa,
    KeyPair, KeyUsagePurpose, SanType,
};
use rustls::pki_types::pem::PemObject;
use rustls::pki_types::{CertificateDer, PrivateKeyDer};
use rustls::server::WebPkiClientVerifier;
use rustls::{ClientConfig, RootCertStore, ServerConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TlsError {
    #[error("certificate generation failed: {0}")]
    Generation(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("TLS configuration failed: {0}")]
    Config(String),
}

/// One PEM-encoded certificate plus its private key.
#[derive(Clone, Debug)]
pub struct PemIdentity {
    pub cert_pem: String,
    pub key_pem: String,
}

impl PemIdentity {
    pub fn cert_der(&self) -> Result<CertificateDer<'static>, TlsError> {
        CertificateDer::from_pem_slice(self.cert_pem.as_bytes())
            .map_err(|e| TlsError::Config(e.to_string()))
    }

    pub fn key_der(&self) -> Result<PrivateKeyDer<'static>, TlsError> {
        PrivateKeyDer::from_pem_slice(self.key_pem.as_bytes())
            .map_err(|e| TlsError::Config(e.to_string()))
    }

    pub fn save(&self, cert_path: &Path, key_path: &Path) -> Result<(), TlsError> {
        std::fs::write(cert_path, &self.cert_pem)?;
        std::fs::write(key_path, &self.key_pem)?;
        Ok(())
    }

    pub fn load(cert_path: &Path, key_path: &Path) -> Result<Self, TlsError> {
        Ok(PemIdentity {
            cert_pem: std::fs::read_to_string(cert_path)?,
            key_pem: std::fs::read_to_string(key_path)?,
        })
    }
}

/// Deployment TLS material: a root CA, one server identity per service,
/// and a client identity for the mutually authenticated LTCA channel.
#[derive(Clone, Debug)]
pub struct TlsMaterial {
    pub ca_cert_pem: String,
    pub ltca_server: PemIdentity,
    pub pca_server: PemIdentity,
    pub client: PemIdentity,
}

fn gen_err(e: rcgen::Error) -> TlsError {
    TlsError::Generation(e.to_string())
}

fn server_params(hosts: &[String]) -> Result<CertificateParams, TlsError> {
    let mut params = CertificateParams::new(hosts.to_vec()).map_err(gen_err)?;
    if let Ok(ip) = "127.0.0.1".parse() {
        params.subject_alt_names.push(SanType::IpAddress(ip));
    }
    params.extended_key_usages.push(ExtendedKeyUsagePurpose::ServerAuth);
    Ok(params)
}

impl TlsMaterial {
    /// Generate a fresh CA and leaf identities for `hosts` (always includes
    /// localhost and 127.0.0.1).
    pub fn generate(hosts: &[String]) -> Result<Self, TlsError> {
        let mut all_hosts = vec!["localhost".to_owned()];
        all_hosts.extend(hosts.iter().cloned());

        let ca_key = KeyPair::generate_for(&rcgen::PKCS_ECDSA_P256_SHA256).map_err(gen_err)?;
        let mut ca_params = CertificateParams::new(Vec::new()).map_err(gen_err)?;
        ca_params.is_ca = IsCa::Ca(BasicConstraints::Unconstrained);
        ca_params.key_usages =
            vec![KeyUsagePurpose::KeyCertSign, KeyUsagePurpose::DigitalSignature];
        let ca = CertifiedIssuer::self_signed(ca_params, ca_key).map_err(gen_err)?;
        let ca_cert_pem = ca.pem();

        let make_server = |hosts: &[String]| -> Result<PemIdentity, TlsError> {
            let key = KeyPair::generate_for(&rcgen::PKCS_ECDSA_P256_SHA256).map_err(gen_err)?;
            let cert = server_params(hosts)?.signed_by(&key, &ca).map_err(gen_err)?;
            Ok(PemIdentity { cert_pem: cert.pem(), key_pem: key.serialize_pem() })
        };
        let ltca_server = make_server(&all_hosts)?;
        let pca_server = make_server(&all_hosts)?;

        let client_key = KeyPair::generate_for(&rcgen::PKCS_ECDSA_P256_SHA256).map_err(gen_err)?;
        let mut client_params = CertificateParams::new(Vec::new()).map_err(gen_err)?;
        client_params.extended_key_usages.push(ExtendedKeyUsagePurpose::ClientAuth);
        let client_cert = client_params.signed_by(&client_key, &ca).map_err(gen_err)?;
        let client = PemIdentity {
            cert_pem: client_cert.pem(),
            key_pem: client_key.serialize_pem(),
        };

        Ok(TlsMaterial { ca_cert_pem, ltca_server, pca_server, client })
    }

    pub fn save(&self, dir: &Path) -> Result<(), TlsError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("ca.pem"), &self.ca_cert_pem)?;
        self.ltca_server.save(&dir.join("ltca.pem"), &dir.join("ltca.key"))?;
        self.pca_server.save(&dir.join("pca.pem"), &dir.join("pca.key"))?;
        self.client.save(&dir.join("client.pem"), &dir.join("client.key"))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, TlsError> {
        Ok(TlsMaterial {
            ca_cert_pem: std::fs::read_to_string(dir.join("ca.pem"))?,
            ltca_server: PemIdentity::load(&dir.join("ltca.pem"), &dir.join("ltca.key"))?,
            pca_server: PemIdentity::load(&dir.join("pca.pem"), &dir.join("pca.key"))?,
            client: PemIdentity::load(&dir.join("client.pem"), &dir.join("client.key"))?,
        })
    }
}

pub fn root_store(ca_cert_pem: &str) -> Result<RootCertStore, TlsError> {
    let mut store = RootCertStore::empty();
    let ca = CertificateDer::from_pem_slice(ca_cert_pem.as_bytes())
        .map_err(|e| TlsError::Config(e.to_string()))?;
    store.add(ca).map_err(|e| TlsError::Config(e.to_string()))?;
    Ok(store)
}

/// Server config requiring client certificates (the LTCA listener).
pub fn server_config_mutual(
    identity: &PemIdentity,
    ca_cert_pem: &str,
) -> Result<Arc<ServerConfig>, TlsError> {
    let verifier = WebPkiClientVerifier::builder(Arc::new(root_store(ca_cert_pem)?))
        .build()
        .map_err(|e| TlsError::Config(e.to_string()))?;
    let config = ServerConfig::builder()
        .with_client_cert_verifier(verifier)
        .with_single_cert(vec![identity.cert_der()?], identity.key_der()?)
        .map_err(|e| TlsError::Config(e.to_string()))?;
    Ok(Arc::new(config))
}

/// Server config without client authentication (the PCA listener).
pub fn server_config_plain(identity: &PemIdentity) -> Result<Arc<ServerConfig>, TlsError> {
    let config = ServerConfig::builder()
        .with_no_client_auth()
        .with_single_cert(vec![identity.cert_der()?], identity.key_der()?)
        .map_err(|e| TlsError::Config(e.to_string()))?;
    Ok(Arc::new(config))
}

/// Client config presenting a certificate (vehicle -> LTCA).
pub fn client_config_mutual(
    ca_cert_pem: &str,
    identity: &PemIdentity,
) -> Result<Arc<ClientConfig>, TlsError> {
    let config = ClientConfig::builder()
        .with_root_certificates(root_store(ca_cert_pem)?)
        .with_client_auth_cert(vec![identity.cert_der()?], identity.key_der()?)
        .map_err(|e| TlsError::Config(e.to_string()))?;
    Ok(Arc::new(config))
}

/// Client config with server verification only (vehicle -> PCA).
pub fn client_config_plain(ca_cert_pem: &str) -> Result<Arc<ClientConfig>, TlsError> {
    let config = ClientConfig::builder()
        .with_root_certificates(root_store(ca_cert_pem)?)
        .with_no_client_auth();
    Ok(Arc::new(config))
}
