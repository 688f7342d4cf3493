//! The summary statistics against an independent streaming (Welford)
//! oracle, and round-trip stability of the outcome field encoding.

use proptest::prelude::*;
use vpki_core::policy::PolicyKind;
use vpki_core::stats::*;
use vpki_core::time::TimeMs;

/// Streaming mean/variance oracle plus selection-based percentile, a
/// different route from the implementation's sort-based pass.
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
    values: Vec<f64>,
}

impl Welford {
    fn new() -> Self {
        Welford { n: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY, values: vec![] }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.values.push(x);
    }

    fn sample_variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    fn p99(&mut self) -> f64 {
        let rank = (0.99 * self.n as f64).ceil() as usize;
        let idx = rank.clamp(1, self.n as usize) - 1;
        let (_, nth, _) =
            self.values.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap());
        *nth
    }
}

fn records_from(values: &[f64]) -> Vec<LatencyRecord> {
    values
        .iter()
        .map(|&v| LatencyRecord {
            vehicle_id: "v".into(),
            trigger: TimeMs(0),
            e2e_ms: v,
            policy: PolicyKind::P3,
            n_pseudonyms: 10,
            outcome: Outcome::Ok,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn summary_matches_streaming_oracle(
        values in proptest::collection::vec(0.01f64..10_000.0, 1..300)
    ) {
        let summary = summary_stats(&records_from(&values)).unwrap();
        let mut oracle = Welford::new();
        for &v in &values {
            oracle.push(v);
        }
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        prop_assert!(rel(summary.avg_ms, oracle.mean) < 1e-9);
        prop_assert!(rel(summary.variance, oracle.sample_variance()) < 1e-6);
        prop_assert!(rel(summary.std_dev_ms, oracle.sample_variance().sqrt()) < 1e-6);
        prop_assert_eq!(summary.min_ms, oracle.min);
        prop_assert_eq!(summary.max_ms, oracle.max);
        prop_assert_eq!(summary.p99_ms, oracle.p99());
        prop_assert_eq!(summary.count, values.len() as u64);
        prop_assert!(summary.min_ms <= summary.avg_ms && summary.avg_ms <= summary.max_ms);
        prop_assert!(summary.min_ms <= summary.p99_ms && summary.p99_ms <= summary.max_ms);
    }

    #[test]
    fn outcome_field_round_trips(code in any::<u16>()) {
        for outcome in [Outcome::Ok, Outcome::OkResidual, Outcome::Err(code)] {
            prop_assert_eq!(Outcome::parse_field(&outcome.as_field()), Some(outcome));
        }
    }
}
