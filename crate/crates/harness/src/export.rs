//! Experiment output files: records.csv, series.csv, summary.json, and a
//! config.json echo. Column order and header strings are part of the
//! format; floats are written in shortest round-trip form so re-parsing
//! reproduces the records exactly.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vpki_core::stats::{LatencyRecord, MinuteBucket, Outcome, StatsSummary};
use vpki_core::time::TimeMs;

use crate::experiment::ExperimentOutput;

pub const RECORDS_HEADER: &str = "vehicle_id,trigger_ms,e2e_ms,policy,n_pseudonyms,outcome";
pub const SERIES_HEADER: &str = "minute,mean_ms,count";

/// summary.json shape; field names are pinned.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SummaryJson {
    pub max_ms: f64,
    pub min_ms: f64,
    pub avg_ms: f64,
    pub std_dev_ms: f64,
    pub variance: f64,
    pub p99_ms: f64,
    pub count: u64,
}

impl From<&StatsSummary> for SummaryJson {
    fn from(s: &StatsSummary) -> Self {
        SummaryJson {
            max_ms: s.max_ms,
            min_ms: s.min_ms,
            avg_ms: s.avg_ms,
            std_dev_ms: s.std_dev_ms,
            variance: s.variance,
            p99_ms: s.p99_ms,
            count: s.count,
        }
    }
}

pub fn write_records(records: &[LatencyRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{:?},{},{},{}",
            r.vehicle_id,
            r.trigger.as_millis(),
            r.e2e_ms,
            r.policy.as_str(),
            r.n_pseudonyms,
            r.outcome.as_field()
        )?;
    }
    Ok(())
}

pub fn parse_records(input: &str) -> Result<Vec<LatencyRecord>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(header) if header == RECORDS_HEADER => {}
        other => bail!("bad records header: {other:?}"),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("bad record at line {}", i + 2);
        }
        records.push(LatencyRecord {
            vehicle_id: fields[0].to_owned(),
            trigger: TimeMs(fields[1].parse().context("trigger_ms")?),
            e2e_ms: fields[2].parse().context("e2e_ms")?,
            policy: fields[3].parse().map_err(|e| anyhow::anyhow!("policy: {e}"))?,
            n_pseudonyms: fields[4].parse().context("n_pseudonyms")?,
            outcome: Outcome::parse_field(fields[5])
                .with_context(|| format!("outcome at line {}", i + 2))?,
        });
    }
    Ok(records)
}

pub fn write_series(series: &[MinuteBucket], mut out: impl Write) -> Result<()> {
    writeln!(out, "{SERIES_HEADER}")?;
    for bucket in series {
        writeln!(out, "{},{:?},{}", bucket.minute, bucket.mean_ms, bucket.count)?;
    }
    Ok(())
}

/// Write the full output set into `dir`.
pub fn export(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut records_file = std::fs::File::create(dir.join("records.csv"))?;
    write_records(&output.records, &mut records_file)?;

    let mut series_file = std::fs::File::create(dir.join("series.csv"))?;
    write_series(&output.series, &mut series_file)?;

    if let Some(summary) = &output.summary {
        let json = serde_json::to_string_pretty(&SummaryJson::from(summary))?;
        std::fs::write(dir.join("summary.json"), json)?;
    }

    let config = serde_json::to_string_pretty(&output.config_echo)?;
    std::fs::write(dir.join("config.json"), config)?;

    let audit = serde_json::to_string_pretty(&output.audit)?;
    std::fs::write(dir.join("audit.json"), audit)?;
    Ok(())
}
