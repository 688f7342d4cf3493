//! Latency records and the aggregate statistics reported by the harness:
//! min/max/mean, sample standard deviation, variance, and nearest-rank p99,
//! plus the per-minute latency series.

use thiserror::Error;

use crate::policy::PolicyKind;
use crate::time::TimeMs;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("no records to aggregate")]
    EmptyInput,
}

/// Outcome of one acquisition attempt. Residual acquisitions are the P1
/// re-requests issued when a trip outlives its estimated duration.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Outcome {
    Ok,
    OkResidual,
    Err(u16),
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok | Outcome::OkResidual)
    }

    pub fn as_field(&self) -> String {
        match self {
            Outcome::Ok => "ok".to_owned(),
            Outcome::OkResidual => "ok_residual".to_owned(),
            Outcome::Err(code) => code.to_string(),
        }
    }

    pub fn parse_field(s: &str) -> Option<Outcome> {
        match s {
            "ok" => Some(Outcome::Ok),
            "ok_residual" => Some(Outcome::OkResidual),
            other => other.parse::<u16>().ok().map(Outcome::Err),
        }
    }
}

/// One measured end-to-end acquisition: wall-clock latency from ticket
/// request initiation to validated pseudonym response, at a simulated
/// trigger instant.
#[derive(Clone, PartialEq, Debug)]
pub struct LatencyRecord {
    pub vehicle_id: String,
    pub trigger: TimeMs,
    pub e2e_ms: f64,
    pub policy: PolicyKind,
    pub n_pseudonyms: u32,
    pub outcome: Outcome,
}

/// Aggregate latency statistics.
#[derive(Clone, PartialEq, Debug)]
pub struct StatsSummary {
    pub max_ms: f64,
    pub min_ms: f64,
    pub avg_ms: f64,
    pub std_dev_ms: f64,
    pub variance: f64,
    pub p99_ms: f64,
    pub count: u64,
}

/// Nearest-rank percentile over a sorted slice: the smallest x with
/// empirical CDF(x) >= q.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Summarize the latencies of successful records. Standard deviation is the
/// sample estimate (n-1 denominator, 0 for a single record); variance is
/// its square; p99 is nearest-rank.
pub fn summary_stats(records: &[LatencyRecord]) -> Result<StatsSummary, StatsError> {
    let mut values: Vec<f64> =
        records.iter().filter(|r| r.outcome.is_ok()).map(|r| r.e2e_ms).collect();
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("latency is never NaN"));
    let n = values.len();
    let sum: f64 = values.iter().sum();
    let avg = sum / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(StatsSummary {
        max_ms: values[n - 1],
        min_ms: values[0],
        avg_ms: avg,
        std_dev_ms: variance.sqrt(),
        variance,
        p99_ms: nearest_rank(&values, 0.99),
        count: n as u64,
    })
}

/// One minute bucket of the latency-over-time series.
#[derive(Clone, PartialEq, Debug)]
pub struct MinuteBucket {
    pub minute: u64,
    pub mean_ms: f64,
    pub count: u64,
}

/// Latency averaged over all completed acquisitions within each minute of
/// simulated time, relative to `origin`. Buckets are `floor((trigger -
/// origin) / 60 s)`; empty buckets are omitted.
pub fn per_minute_series(records: &[LatencyRecord], origin: TimeMs) -> Vec<MinuteBucket> {
    let mut buckets: std::collections::BTreeMap<u64, (f64, u64)> = Default::default();
    for r in records.iter().filter(|r| r.outcome.is_ok()) {
        let minute = r.trigger.saturating_since(origin).as_millis() / 60_000;
        let entry = buckets.entry(minute).or_insert((0.0, 0));
        entry.0 += r.e2e_ms;
        entry.1 += 1;
    }
    buckets
        .into_iter()
        .map(|(minute, (sum, count))| MinuteBucket { minute, mean_ms: sum / count as f64, count })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(trigger_ms: u64, e2e: f64) -> LatencyRecord {
        LatencyRecord {
            vehicle_id: "v".into(),
            trigger: TimeMs(trigger_ms),
            e2e_ms: e2e,
            policy: PolicyKind::P2,
            n_pseudonyms: 10,
            outcome: Outcome::Ok,
        }
    }

    #[test]
    fn hand_computed_summary() {
        let records: Vec<_> = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&v| rec(0, v))
            .collect();
        let s = summary_stats(&records).unwrap();
        assert_eq!(s.min_ms, 1.0);
        assert_eq!(s.max_ms, 5.0);
        assert_eq!(s.avg_ms, 3.0);
        assert!((s.std_dev_ms - 1.5811388300841898).abs() < 1e-12);
        assert!((s.variance - 2.5).abs() < 1e-12);
        assert_eq!(s.p99_ms, 5.0);
        assert_eq!(s.count, 5);
    }

    #[test]
    fn p99_nearest_rank_101_records() {
        // 100 records of value k plus one of 10k: rank ceil(0.99*101) = 100,
        // so p99 is still k.
        let mut records: Vec<_> = (0..100).map(|_| rec(0, 7.0)).collect();
        records.push(rec(0, 70.0));
        let s = summary_stats(&records).unwrap();
        assert_eq!(s.p99_ms, 7.0);
        // with one more outlier the rank crosses over
        records.push(rec(0, 70.0));
        let s = summary_stats(&records).unwrap();
        assert_eq!(s.p99_ms, 70.0);
    }

    #[test]
    fn single_record_summary() {
        let s = summary_stats(&[rec(0, 42.0)]).unwrap();
        assert_eq!(s.min_ms, 42.0);
        assert_eq!(s.max_ms, 42.0);
        assert_eq!(s.avg_ms, 42.0);
        assert_eq!(s.p99_ms, 42.0);
        assert_eq!(s.std_dev_ms, 0.0);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(summary_stats(&[]), Err(StatsError::EmptyInput));
        let failed = [LatencyRecord { outcome: Outcome::Err(205), ..rec(0, 1.0) }];
        assert_eq!(summary_stats(&failed), Err(StatsError::EmptyInput));
    }

    #[test]
    fn minute_buckets() {
        let records = vec![rec(10_000, 40.0), rec(50_000, 60.0), rec(60_000, 99.0)];
        let series = per_minute_series(&records, TimeMs(0));
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].minute, 0);
        assert_eq!(series[0].mean_ms, 50.0);
        assert_eq!(series[0].count, 2);
        // a record at exactly 60.0 s belongs to minute 1
        assert_eq!(series[1].minute, 1);
        assert_eq!(series[1].count, 1);
    }

    #[test]
    fn failed_records_are_excluded_from_series() {
        let mut records = vec![rec(0, 40.0)];
        records.push(LatencyRecord { outcome: Outcome::Err(901), ..rec(0, 9000.0) });
        let series = per_minute_series(&records, TimeMs(0));
        assert_eq!(series[0].count, 1);
        assert_eq!(series[0].mean_ms, 40.0);
    }
}
