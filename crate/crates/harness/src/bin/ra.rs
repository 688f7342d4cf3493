//! Resolution Authority CLI: walk a pseudonym's identifiable-key chain
//! back to the issuing LTC via the PCA and LTCA reveal endpoints.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use vpki_bench::config;
use vpki_core::codec;
use vpki_core::model::Pseudonym;
use vpki_core::resolution::resolve;
use vpki_net::client::{Endpoint, TlsLtcaChannel, TlsPcaChannel};
use vpki_net::tls::{self, TlsMaterial};

#[derive(Parser)]
#[command(name = "ra", about = "Resolution Authority: pseudonym-to-LTC resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a pseudonym (hex-encoded wire format) to its issuing LTC.
    Resolve {
        /// File holding the hex-encoded pseudonym certificate.
        #[arg(long)]
        pseudonym: PathBuf,
        /// PCA address (host:port).
        #[arg(long)]
        pca: String,
        /// LTCA address (host:port).
        #[arg(long)]
        ltca: String,
        /// Directory with the deployment TLS material.
        #[arg(long)]
        tls_dir: PathBuf,
        /// TLS server name of the services.
        #[arg(long, default_value = "localhost")]
        server_name: String,
        /// RA credential (32 bytes, hex).
        #[arg(long)]
        credential_hex: String,
    },
}

fn main() -> Result<()> {
    vpki_bench::init_logging();
    let Cli { command } = Cli::parse();
    match command {
        Command::Resolve { pseudonym, pca, ltca, tls_dir, server_name, credential_hex } => {
            let hex_text = std::fs::read_to_string(&pseudonym)
                .with_context(|| format!("reading {}", pseudonym.display()))?;
            let bytes = hex::decode(hex_text.trim()).context("pseudonym file must be hex")?;
            let pseudonym: Pseudonym =
                codec::decode(&bytes).map_err(|e| anyhow::anyhow!("bad pseudonym: {e}"))?;
            let credential = config::parse_credential(&credential_hex)?;

            let material = TlsMaterial::load(&tls_dir)?;
            let mutual = tls::client_config_mutual(&material.ca_cert_pem, &material.client)?;
            let plain = tls::client_config_plain(&material.ca_cert_pem)?;
            let ltca_channel =
                TlsLtcaChannel { endpoint: Endpoint::new(ltca, server_name.clone(), mutual) };
            let pca_channel =
                TlsPcaChannel { endpoint: Endpoint::new(pca, server_name, plain) };

            let result = resolve(&pseudonym, &pca_channel, &ltca_channel, &credential)
                .map_err(|e| anyhow::anyhow!("resolution failed: {e}"))?;
            println!("pseudonym serial : {}", result.pseudonym_serial);
            println!("ticket serial    : {}", result.ticket_serial);
            println!("ltc digest       : {}", result.ltc_digest);
            println!(
                "pca link         : {}",
                if result.pca_link.ok() { "verified" } else { "MISMATCH" }
            );
            println!(
                "ltca link        : {}",
                if result.ltca_link.ok() { "verified" } else { "MISMATCH" }
            );
            if !result.chain_valid() {
                bail!("ChainMismatch({:?})", result.mismatch().unwrap());
            }
            println!("chain valid      : yes");
            Ok(())
        }
    }
}
