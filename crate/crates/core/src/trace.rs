//! Mobility-trace ingestion and synthesis.
//!
//! Trace files are CSV with the header `vehicle_id,depart_s,duration_s`;
//! departures are decimal seconds from the trace origin, durations decimal
//! seconds, rows sorted by departure. The synthetic generator draws
//! departures uniformly (or bimodally, for rush hours) over a window and
//! durations log-normally around a requested mean, deterministically for a
//! given seed.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal, Normal, Uniform};
use thiserror::Error;

use crate::policy::TripRecord;
use crate::time::{DurMs, TimeMs};

pub const TRACE_HEADER: &str = "vehicle_id,depart_s,duration_s";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("missing or wrong header line")]
    BadHeader,
    #[error("rows not sorted by departure (line {0})")]
    UnsortedInput(usize),
    #[error("trace is empty")]
    EmptyTrace,
}

/// Parse a trace from a reader. Departures are converted to absolute
/// instants relative to `origin`. Rows must be depart-sorted
/// (non-decreasing); rows with non-positive duration are malformed.
pub fn parse_trace_from(
    reader: impl Read,
    origin: TimeMs,
) -> Result<Vec<TripRecord>, TraceError> {
    let mut lines = BufReader::new(reader).lines();
    match lines.next() {
        Some(Ok(header)) if header.trim_end() == TRACE_HEADER => {}
        Some(Ok(_)) => return Err(TraceError::BadHeader),
        Some(Err(e)) => return Err(TraceError::Io(e)),
        None => return Err(TraceError::BadHeader),
    }
    let mut records = Vec::new();
    let mut last_depart = None;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (id, depart_s, duration_s) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(d), Some(u), None) if !id.is_empty() => (id, d, u),
            _ => return Err(TraceError::MalformedRow(line_no)),
        };
        let depart_s: f64 =
            depart_s.parse().map_err(|_| TraceError::MalformedRow(line_no))?;
        let duration_s: f64 =
            duration_s.parse().map_err(|_| TraceError::MalformedRow(line_no))?;
        if !depart_s.is_finite() || depart_s < 0.0 || !duration_s.is_finite() || duration_s <= 0.0
        {
            return Err(TraceError::MalformedRow(line_no));
        }
        let duration = DurMs::from_secs_f64(duration_s);
        if duration.is_zero() {
            return Err(TraceError::MalformedRow(line_no));
        }
        let depart = origin + DurMs::from_secs_f64(depart_s);
        if let Some(prev) = last_depart {
            if depart < prev {
                return Err(TraceError::UnsortedInput(line_no));
            }
        }
        last_depart = Some(depart);
        records.push(TripRecord { vehicle_id: id.to_owned(), depart, duration });
    }
    Ok(records)
}

pub fn parse_trace(path: impl AsRef<Path>, origin: TimeMs) -> Result<Vec<TripRecord>, TraceError> {
    parse_trace_from(std::fs::File::open(path)?, origin)
}

/// Write records in the trace schema, departures relative to `origin`,
/// three decimals (millisecond precision), LF line endings.
pub fn write_trace(
    records: &[TripRecord],
    origin: TimeMs,
    mut out: impl Write,
) -> Result<(), TraceError> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:.3},{:.3}",
            r.vehicle_id,
            r.depart.saturating_since(origin).as_secs_f64(),
            r.duration.as_secs_f64()
        )?;
    }
    Ok(())
}

/// Sort records by departure (stable), for ingesting unsorted inputs.
pub fn sort_records(records: &mut [TripRecord]) {
    records.sort_by_key(|r| r.depart);
}

/// Departure-time shapes for the generator.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum DepartureShape {
    Uniform,
    /// Two rush-hour peaks at 25% and 75% of the window.
    Bimodal,
}

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub n_trips: usize,
    pub window: DurMs,
    pub mean_duration: DurMs,
    pub seed: u64,
    pub shape: DepartureShape,
    /// Log-normal shape parameter for durations.
    pub sigma: f64,
}

impl SynthParams {
    pub fn new(n_trips: usize, window: DurMs, mean_duration: DurMs, seed: u64) -> Self {
        SynthParams {
            n_trips,
            window,
            mean_duration,
            seed,
            shape: DepartureShape::Uniform,
            sigma: 0.5,
        }
    }
}

/// Generate a synthetic depart-sorted trace. Deterministic for a given
/// parameter set: the same seed yields a byte-identical file.
pub fn synth_trace(params: &SynthParams, origin: TimeMs) -> Vec<TripRecord> {
    assert!(params.n_trips > 0, "n_trips must be positive");
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(params.seed);
    // mean of LogNormal(mu, sigma) is exp(mu + sigma^2/2); solve for mu.
    let mean_s = params.mean_duration.as_secs_f64().max(0.001);
    let mu = mean_s.ln() - params.sigma * params.sigma / 2.0;
    let duration_dist = LogNormal::new(mu, params.sigma).expect("valid log-normal parameters");
    let window_s = params.window.as_secs_f64();
    let uniform = Uniform::new(0.0, window_s).expect("positive window");
    let peaks = [0.25 * window_s, 0.75 * window_s];
    let rush = Normal::new(0.0, window_s / 10.0).expect("valid normal parameters");

    let mut rows: Vec<(f64, f64)> = (0..params.n_trips)
        .map(|i| {
            let depart_s = match params.shape {
                DepartureShape::Uniform => uniform.sample(&mut rng),
                DepartureShape::Bimodal => {
                    let peak = peaks[i % 2];
                    (peak + rush.sample(&mut rng)).clamp(0.0, window_s)
                }
            };
            let duration_s = duration_dist.sample(&mut rng).max(1.0);
            (depart_s, duration_s)
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("departures are finite"));

    rows.into_iter()
        .enumerate()
        .map(|(i, (depart_s, duration_s))| TripRecord {
            vehicle_id: format!("v{i:06}"),
            depart: origin + DurMs::from_secs_f64(depart_s),
            duration: DurMs::from_secs_f64(duration_s),
        })
        .collect()
}

/// Exact aggregate features of a trace.
#[derive(Clone, PartialEq, Debug)]
pub struct TraceStats {
    pub count: usize,
    pub mean_duration_s: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
}

pub fn trace_stats(records: &[TripRecord]) -> Result<TraceStats, TraceError> {
    if records.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    let durations: Vec<f64> = records.iter().map(|r| r.duration.as_secs_f64()).collect();
    let sum: f64 = durations.iter().sum();
    Ok(TraceStats {
        count: records.len(),
        mean_duration_s: sum / durations.len() as f64,
        min_duration_s: durations.iter().copied().fold(f64::INFINITY, f64::min),
        max_duration_s: durations.iter().copied().fold(0.0, f64::max),
    })
}
