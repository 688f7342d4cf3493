//! Benchmark harness for the VPKI services: trace replay under compressed
//! simulated time, latency aggregation, output files, and the saturation
//! probe, plus configuration shared by the service CLIs.

pub mod config;
pub mod experiment;
pub mod export;
pub mod launch;

/// Initialize logging from the `VPKI_BENCH_LOG` environment variable
/// (standard `env_logger` filter syntax; default `info`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("VPKI_BENCH_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp_millis().try_init();
}
