//! Benchmark driver: replay a mobility trace as concurrent vehicles against
//! the VPKI services and emit latency records, per-minute series, and
//! aggregate statistics.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use vpki_bench::experiment::{run_experiment, throughput_probe, ExperimentConfig, ServerSpec};
use vpki_bench::export;
use vpki_core::policy::PolicyKind;
use vpki_core::time::{DurMs, TimeMs};
use vpki_core::trace::parse_trace;

#[derive(Parser)]
#[command(name = "bench", about = "Trace-replay latency benchmark for the VPKI services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace under a policy and write records.csv, series.csv,
    /// summary.json, config.json, and audit.json.
    Run {
        /// Trace CSV (vehicle_id,depart_s,duration_s).
        #[arg(long)]
        trace: PathBuf,
        /// Acquisition policy.
        #[arg(long)]
        policy: PolicyKind,
        /// Refill interval in seconds (P2 interval; PCA universal interval
        /// when launching servers).
        #[arg(long, default_value_t = 300.0)]
        gamma: f64,
        /// Pseudonym lifetime in seconds.
        #[arg(long, default_value_t = 30.0)]
        tau: f64,
        /// Simulated-time speedup for trigger scheduling (latencies stay
        /// wall clock).
        #[arg(long, default_value_t = 60.0)]
        compression: f64,
        /// LTCA address (remote mode).
        #[arg(long)]
        ltca: Option<String>,
        /// PCA address (remote mode).
        #[arg(long)]
        pca: Option<String>,
        /// LTCA application public key, hex (remote mode).
        #[arg(long)]
        ltca_pubkey: Option<String>,
        /// TLS material directory (remote mode).
        #[arg(long)]
        tls_dir: Option<PathBuf>,
        /// TLS server name (remote mode).
        #[arg(long, default_value = "localhost")]
        server_name: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Start both services in-process on loopback TLS.
        #[arg(long)]
        launch_servers: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Trace origin as ms since the epoch; trace departures are
        /// relative to it. Default: 06:00 UTC today.
        #[arg(long)]
        origin_ms: Option<u64>,
        /// Abort issuing new work above this error fraction (1.0 = never).
        #[arg(long, default_value_t = 1.0)]
        abort_error_rate: f64,
        /// Keep service state in memory instead of log files under OUT.
        #[arg(long)]
        ephemeral_state: bool,
    },
    /// Measure sustained full-acquisition throughput against an in-process
    /// deployment (wall clock, no compression).
    Throughput {
        #[arg(long, default_value_t = 2000)]
        acquisitions: usize,
        #[arg(long, default_value_t = 32)]
        concurrency: usize,
        #[arg(long, default_value_t = 30.0)]
        tau: f64,
        /// Request window length in seconds (window/tau pseudonyms per
        /// acquisition).
        #[arg(long, default_value_t = 300.0)]
        window: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    vpki_bench::init_logging();
    match Cli::parse().command {
        Command::Run {
            trace,
            policy,
            gamma,
            tau,
            compression,
            ltca,
            pca,
            ltca_pubkey,
            tls_dir,
            server_name,
            out,
            launch_servers,
            seed,
            origin_ms,
            abort_error_rate,
            ephemeral_state,
        } => {
            let origin = TimeMs(origin_ms.unwrap_or_else(|| {
                let now = TimeMs::now().as_millis();
                now - now % 86_400_000 + 6 * 3_600_000
            }));
            let trips = parse_trace(&trace, origin)
                .with_context(|| format!("loading trace {}", trace.display()))?;
            if trips.is_empty() {
                bail!("trace is empty");
            }

            let servers = if launch_servers {
                ServerSpec::Launch {
                    state_dir: if ephemeral_state { None } else { Some(out.join("state")) },
                }
            } else {
                match (ltca, pca, ltca_pubkey, tls_dir) {
                    (Some(ltca_addr), Some(pca_addr), Some(key_hex), Some(dir)) => {
                        ServerSpec::Remote {
                            ltca_addr,
                            pca_addr,
                            tls_dir: dir,
                            server_name,
                            ltca_public_key_hex: key_hex,
                        }
                    }
                    _ => bail!(
                        "remote mode needs --ltca, --pca, --ltca-pubkey and --tls-dir \
                         (or pass --launch-servers)"
                    ),
                }
            };

            let mut config = ExperimentConfig::new(trips, policy, origin);
            config.gamma = DurMs::from_secs_f64(gamma);
            config.tau = DurMs::from_secs_f64(tau);
            config.compression = compression;
            config.seed = seed;
            config.servers = servers;
            config.error_abort_rate = abort_error_rate;

            let output = run_experiment(&config)?;
            export::export(&output, &out)?;

            println!("trips            : {}", config.trips.len());
            println!("acquisitions     : {}", output.records.len());
            println!("expected         : {}", output.audit.expected_acquisitions);
            println!("error rate       : {:.4}", output.error_rate);
            println!("replay wall time : {:.1} s", output.replay_wall.as_secs_f64());
            println!("sustained ok/s   : {:.1}", output.sustained_ok_per_sec);
            if let Some(summary) = &output.summary {
                println!(
                    "latency ms       : min {:.2} avg {:.2} p99 {:.2} max {:.2} (n={})",
                    summary.min_ms, summary.avg_ms, summary.p99_ms, summary.max_ms, summary.count
                );
            }
            println!(
                "coverage gaps    : {} ms over {} trips",
                output.audit.coverage_gap_ms, output.audit.trips_with_gaps
            );
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Throughput { acquisitions, concurrency, tau, window, seed } => {
            let report = throughput_probe(
                acquisitions,
                concurrency,
                DurMs::from_secs_f64(tau),
                DurMs::from_secs_f64(window),
                seed,
            )?;
            println!("attempted        : {}", report.attempted);
            println!("completed ok     : {}", report.ok);
            println!("wall time        : {:.2} s", report.wall.as_secs_f64());
            println!("throughput       : {:.1} acquisitions/s", report.per_sec);
            Ok(())
        }
    }
}
