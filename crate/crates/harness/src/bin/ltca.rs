//! Long-Term CA service daemon.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use vpki_bench::config::{self, LtcaFileConfig};
use vpki_core::clock::{Clock, SystemClock};
use vpki_core::crypto::SharedRng;
use vpki_core::ltca::{Ltca, LtcaConfig};
use vpki_core::store::FileLog;
use vpki_core::time::DurMs;
use vpki_net::server::{spawn_server, LtcaDispatcher};
use vpki_net::tls::{self, TlsMaterial};

#[derive(Parser)]
#[command(name = "ltca", about = "Long-Term CA: vehicle registry and ticket issuance")]
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
        Command::Serve { config: path } => serve(config::load_toml::<LtcaFileConfig>(&path)?),
    }
}

fn serve(cfg: LtcaFileConfig) -> Result<()> {
    let keys = config::load_keypair(&cfg.key_file)?;
    let mut service_config = LtcaConfig::new(
        config::id_string(&cfg.issuer_id)?,
        config::parse_credential(&cfg.ra_credential_hex)?,
    );
    service_config.skew = config::secs_or(cfg.skew_secs, 60);
    service_config.ticket_grace = config::secs_or(cfg.grace_secs, 60);
    service_config.max_window = cfg.max_window_secs.map(DurMs::from_secs);

    let ltca = Arc::new(Ltca::new(
        service_config,
        keys,
        SharedRng::system(),
        Box::new(FileLog::open(&cfg.state_file)?),
    )?);
    info!(
        "LTCA {} serving on {} (public key {})",
        cfg.issuer_id,
        cfg.listen,
        hex::encode(ltca.public_key().as_bytes())
    );

    let clock: Arc<dyn Clock> = match &cfg.clock {
        Some(spec) => Arc::new(spec.build()),
        None => Arc::new(SystemClock),
    };
    let material = TlsMaterial::load(&cfg.tls.dir)
        .with_context(|| format!("loading TLS material from {}", cfg.tls.dir.display()))?;
    let tls_config = tls::server_config_mutual(&material.ltca_server, &material.ca_cert_pem)?;

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let handle =
            spawn_server(&cfg.listen, tls_config, Arc::new(LtcaDispatcher { ltca, clock }))
                .await?;
        info!("listening on {}", handle.local_addr);
        tokio::signal::ctrl_c().await?;
        handle.shutdown();
        Ok::<_, anyhow::Error>(())
    })
}
