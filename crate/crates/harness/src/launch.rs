//! In-process service deployment for the benchmark driver and tests: both
//! services on loopback TLS inside one tokio runtime, sharing a simulated
//! clock with the clients.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use vpki_core::clock::Clock;
use vpki_core::crypto::{generate_keypair, SharedRng};
use vpki_core::ltca::{Ltca, LtcaConfig};
use vpki_core::model::{IdString, RaCredential};
use vpki_core::pca::{Pca, PcaConfig};
use vpki_core::store::{FileLog, MemLog, RecordLog};
use vpki_core::time::{DurMs, TimeMs};
use vpki_net::client::{Endpoint, TlsLtcaChannel, TlsPcaChannel};
use vpki_net::server::{spawn_server, LtcaDispatcher, PcaDispatcher, ServerHandle};
use vpki_net::tls::{self, TlsMaterial};

pub struct LaunchParams {
    pub issuer_id: IdString,
    pub pca_id: IdString,
    pub tau: DurMs,
    pub gamma: DurMs,
    pub t_date: TimeMs,
    /// Freshness window and ticket grace, in simulated time. Scale these by
    /// the compression factor so they stay equivalent to their wall-time
    /// defaults.
    pub skew: DurMs,
    pub grace: DurMs,
    pub credential: RaCredential,
    /// Service state logs live here; None keeps state in memory.
    pub state_dir: Option<std::path::PathBuf>,
    pub seed: u64,
}

/// Both services running on loopback TLS. Shuts down when dropped.
pub struct Deployment {
    pub ltca: Arc<Ltca>,
    pub pca: Arc<Pca>,
    pub ltca_channel: TlsLtcaChannel,
    pub pca_channel: TlsPcaChannel,
    pub material: TlsMaterial,
    ltca_handle: ServerHandle,
    pca_handle: ServerHandle,
    rt: tokio::runtime::Runtime,
}

impl Deployment {
    pub fn ltca_addr(&self) -> String {
        self.ltca_handle.local_addr.to_string()
    }

    pub fn pca_addr(&self) -> String {
        self.pca_handle.local_addr.to_string()
    }

    /// Stop accepting PCA connections (fault injection in tests).
    pub fn shutdown_pca(&self) {
        self.pca_handle.shutdown();
    }
}

impl Drop for Deployment {
    fn drop(&mut self) {
        self.ltca_handle.shutdown();
        self.pca_handle.shutdown();
        // drain server tasks before the runtime goes away
        let _ = &self.rt;
    }
}

fn open_log(dir: &Option<std::path::PathBuf>, name: &str) -> Result<Box<dyn RecordLog>> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating state dir {}", dir.display()))?;
            Ok(Box::new(FileLog::open(dir.join(name))?))
        }
        None => Ok(Box::new(MemLog::new())),
    }
}

pub fn launch(params: &LaunchParams, clock: Arc<dyn Clock>) -> Result<Deployment> {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(params.seed);
    use rand_core::SeedableRng as _;

    let ltca_keys = generate_keypair(&mut rng);
    let pca_keys = generate_keypair(&mut rng);

    let mut ltca_config = LtcaConfig::new(params.issuer_id.clone(), params.credential);
    ltca_config.skew = params.skew;
    ltca_config.ticket_grace = params.grace;
    let ltca = Arc::new(Ltca::new(
        ltca_config,
        ltca_keys.clone(),
        SharedRng::system(),
        open_log(&params.state_dir, "ltca.log")?,
    )?);

    let mut pca_config = PcaConfig::new(
        params.pca_id.clone(),
        params.tau,
        params.gamma,
        params.t_date,
        params.credential,
    )?;
    pca_config.skew = params.skew;
    let trust: HashMap<IdString, _> = [(params.issuer_id.clone(), ltca_keys.public)].into();
    let pca = Arc::new(Pca::new(
        pca_config,
        pca_keys,
        trust,
        SharedRng::system(),
        open_log(&params.state_dir, "pca.log")?,
    )?);

    let material = TlsMaterial::generate(&[])?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let (ltca_handle, pca_handle) = rt.block_on(async {
        let ltca_handle = spawn_server(
            "127.0.0.1:0",
            tls::server_config_mutual(&material.ltca_server, &material.ca_cert_pem)?,
            Arc::new(LtcaDispatcher { ltca: ltca.clone(), clock: clock.clone() }),
        )
        .await?;
        let pca_handle = spawn_server(
            "127.0.0.1:0",
            tls::server_config_plain(&material.pca_server)?,
            Arc::new(PcaDispatcher { pca: pca.clone(), clock: clock.clone() }),
        )
        .await?;
        Ok::<_, anyhow::Error>((ltca_handle, pca_handle))
    })?;

    let mutual = tls::client_config_mutual(&material.ca_cert_pem, &material.client)?;
    let plain = tls::client_config_plain(&material.ca_cert_pem)?;
    let ltca_channel = TlsLtcaChannel {
        endpoint: Endpoint::new(ltca_handle.local_addr.to_string(), "localhost", mutual),
    };
    let pca_channel = TlsPcaChannel {
        endpoint: Endpoint::new(pca_handle.local_addr.to_string(), "localhost", plain),
    };

    Ok(Deployment { ltca, pca, ltca_channel, pca_channel, material, ltca_handle, pca_handle, rt })
}

/// Export the deployment's TLS material so external tools (e.g. `ra
/// resolve`) can talk to it.
pub fn save_material(deployment: &Deployment, dir: &Path) -> Result<()> {
    deployment.material.save(dir)?;
    Ok(())
}
