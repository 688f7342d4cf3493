//! Mobility-trace tooling: synthesize statistics-matched traces and report
//! aggregate features of existing ones.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vpki_core::time::{DurMs, TimeMs};
use vpki_core::trace::{
    parse_trace, sort_records, synth_trace, trace_stats, write_trace, DepartureShape, SynthParams,
};

#[derive(Parser)]
#[command(name = "trace", about = "Mobility trace synthesis and statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace (departures over a window, log-normal
    /// trip durations around a target mean).
    Synth {
        /// Number of trips.
        #[arg(long)]
        trips: usize,
        /// Departure window in seconds.
        #[arg(long)]
        window: f64,
        /// Target mean trip duration in seconds.
        #[arg(long)]
        mean_duration: f64,
        /// RNG seed; the same seed reproduces the file byte for byte.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Two rush-hour departure peaks instead of uniform departures.
        #[arg(long)]
        bimodal: bool,
        /// Log-normal shape parameter for durations.
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
    },
    /// Print count, mean, min, and max trip duration of a trace.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Tolerate unsorted input by sorting in memory.
        #[arg(long)]
        sort: bool,
    },
}

fn main() -> Result<()> {
    vpki_bench::init_logging();
    match Cli::parse().command {
        Command::Synth { trips, window, mean_duration, seed, out, bimodal, sigma } => {
            let mut params = SynthParams::new(
                trips,
                DurMs::from_secs_f64(window),
                DurMs::from_secs_f64(mean_duration),
                seed,
            );
            params.sigma = sigma;
            if bimodal {
                params.shape = DepartureShape::Bimodal;
            }
            let records = synth_trace(&params, TimeMs(0));
            let file = std::fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            write_trace(&records, TimeMs(0), file)?;
            let stats = trace_stats(&records)?;
            println!(
                "wrote {} trips to {} (mean duration {:.2} s)",
                stats.count,
                out.display(),
                stats.mean_duration_s
            );
            Ok(())
        }
        Command::Stats { input, sort } => {
            let records = match parse_trace(&input, TimeMs(0)) {
                Ok(records) => records,
                Err(vpki_core::trace::TraceError::UnsortedInput(line)) if sort => {
                    // re-read leniently, then sort
                    let text = std::fs::read_to_string(&input)?;
                    let mut lenient = lenient_parse(&text)?;
                    let _ = line;
                    sort_records(&mut lenient);
                    lenient
                }
                Err(e) => return Err(e).context("parsing trace"),
            };
            let stats = trace_stats(&records)?;
            println!("trips           : {}", stats.count);
            println!("mean duration   : {:.2} s", stats.mean_duration_s);
            println!("min duration    : {:.2} s", stats.min_duration_s);
            println!("max duration    : {:.2} s", stats.max_duration_s);
            Ok(())
        }
    }
}

/// Parse rows without the sorted-input requirement (used with --sort).
fn lenient_parse(text: &str) -> Result<Vec<vpki_core::policy::TripRecord>> {
    let mut sorted: Vec<&str> = text.lines().collect();
    if sorted.is_empty() {
        anyhow::bail!("empty trace");
    }
    // sort the body on the numeric second column, keep the header
    let header = sorted.remove(0);
    sorted.sort_by(|a, b| {
        let depart = |line: &str| -> f64 {
            line.split(',').nth(1).and_then(|f| f.parse().ok()).unwrap_or(f64::MAX)
        };
        depart(a).partial_cmp(&depart(b)).unwrap()
    });
    let mut joined = String::from(header);
    for line in sorted {
        joined.push('\n');
        joined.push_str(line);
    }
    joined.push('\n');
    vpki_core::trace::parse_trace_from(joined.as_bytes(), TimeMs(0)).map_err(Into::into)
}
