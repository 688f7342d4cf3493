//! Pseudonym CA service daemon.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use vpki_bench::config::{self, PcaFileConfig};
use vpki_core::clock::{Clock, SystemClock};
use vpki_core::crypto::SharedRng;
use vpki_core::pca::{Pca, PcaConfig};
use vpki_core::store::FileLog;
use vpki_core::time::{DurMs, TimeMs};
use vpki_net::server::{spawn_server, PcaDispatcher};
use vpki_net::tls::{self, TlsMaterial};

#[derive(Parser)]
#[command(name = "pca", about = "Pseudonym CA: ticket validation and pseudonym issuance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a fresh P-256 key file and print the public key.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    vpki_bench::init_logging();
    match Cli::parse().command {
        Command::Keygen { out } => {
            let keys = vpki_core::crypto::generate_keypair_os()
                .map_err(|e| anyhow::anyhow!("key generation failed: {e}"))?;
            config::save_keypair(&out, &keys)?;
            println!("{}", hex::encode(keys.public.as_bytes()));
            Ok(())
        }
        Command::Serve { config: path } => serve(config::load_toml::<PcaFileConfig>(&path)?),
    }
}

fn serve(cfg: PcaFileConfig) -> Result<()> {
    let keys = config::load_keypair(&cfg.key_file)?;
    let mut service_config = PcaConfig::new(
        config::id_string(&cfg.pca_id)?,
        DurMs::from_secs(cfg.tau_secs),
        DurMs::from_secs(cfg.gamma_secs),
        TimeMs(cfg.t_date_ms),
        config::parse_credential(&cfg.ra_credential_hex)?,
    )
    .map_err(|e| anyhow::anyhow!("invalid PCA parameters: {e}"))?;
    service_config.skew = config::secs_or(cfg.skew_secs, 60);

    let pca = Arc::new(Pca::new(
        service_config,
        keys,
        config::trust_store(&cfg.trust)?,
        SharedRng::system(),
        Box::new(FileLog::open(&cfg.state_file)?),
    )?);
    info!(
        "PCA {} serving on {} (tau={}s gamma={}s, public key {})",
        cfg.pca_id,
        cfg.listen,
        cfg.tau_secs,
        cfg.gamma_secs,
        hex::encode(pca.public_key().as_bytes())
    );

    let clock: Arc<dyn Clock> = match &cfg.clock {
        Some(spec) => Arc::new(spec.build()),
        None => Arc::new(SystemClock),
    };
    let material = TlsMaterial::load(&cfg.tls.dir)
        .with_context(|| format!("loading TLS material from {}", cfg.tls.dir.display()))?;
    let tls_config = tls::server_config_plain(&material.pca_server)?;

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let handle =
            spawn_server(&cfg.listen, tls_config, Arc::new(PcaDispatcher { pca, clock })).await?;
        info!("listening on {}", handle.local_addr);
        tokio::signal::ctrl_c().await?;
        handle.shutdown();
        Ok::<_, anyhow::Error>(())
    })
}
