//! Property tests for the policy engine against brute-force oracles:
//! schedule coverage, slice non-overlap, the interaction-count law, and the
//! P3 global-alignment and indistinguishability invariants.

use proptest::prelude::*;
use vpki_core::policy::*;
use vpki_core::time::{DurMs, TimeMs, Window};

const DAY: TimeMs = TimeMs(1_464_739_200_000);

fn arb_policy() -> impl Strategy<Value = PolicyConfig> {
    (0u8..3, 1u64..=20, 6u64..=60).prop_map(|(kind, tau_units, gamma_units)| {
        let kind = match kind {
            0 => PolicyKind::P1,
            1 => PolicyKind::P2,
            _ => PolicyKind::P3,
        };
        let tau = DurMs::from_secs(tau_units * 5);
        let gamma = match kind {
            // P3 needs tau | gamma; build gamma as a multiple of tau.
            PolicyKind::P3 => DurMs(tau.as_millis() * (gamma_units / 5).max(1)),
            _ => DurMs::from_secs(gamma_units * 10),
        };
        PolicyConfig { kind, gamma, tau_p: tau, t_date: DAY }
    })
}

fn arb_trip() -> impl Strategy<Value = TripRecord> {
    (0u64..86_400_000, 1u64..3_600_000).prop_map(|(depart_ms, duration_ms)| TripRecord {
        vehicle_id: "p".into(),
        depart: DAY + DurMs(depart_ms),
        duration: DurMs(duration_ms),
    })
}

/// Brute-force day-grid enumerator for P3 interactions.
fn grid_cells_intersecting(trip: &TripRecord, gamma: DurMs, t_date: TimeMs) -> u64 {
    let mut count = 0;
    let mut start = t_date;
    while start < trip.depart + trip.duration {
        let cell = Window { start, end: start + gamma };
        if cell.overlaps(&trip.interval()) {
            count += 1;
        }
        start = cell.end;
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// |compute_schedule| == interactions_count, and the P3 value matches
    /// the brute-force grid enumeration.
    #[test]
    fn count_law(cfg in arb_policy(), trip in arb_trip()) {
        let schedule = compute_schedule(&cfg, &trip).unwrap();
        let count = interactions_count(&cfg, &trip).unwrap();
        prop_assert_eq!(schedule.len() as u64, count);
        match cfg.kind {
            PolicyKind::P1 => prop_assert_eq!(count, 1),
            PolicyKind::P2 => prop_assert_eq!(count, trip.duration.div_ceil(cfg.gamma)),
            PolicyKind::P3 => {
                prop_assert_eq!(count, grid_cells_intersecting(&trip, cfg.gamma, cfg.t_date));
            }
        }
    }

    /// Schedule windows jointly cover the trip; triggers strictly increase;
    /// non-first triggers coincide with window starts; the first fires at
    /// departure.
    #[test]
    fn schedule_shape(cfg in arb_policy(), trip in arb_trip()) {
        let schedule = compute_schedule(&cfg, &trip).unwrap();
        let entries = &schedule.entries;
        prop_assert_eq!(entries[0].trigger, trip.depart);
        for pair in entries.windows(2) {
            prop_assert!(pair[0].trigger < pair[1].trigger);
            prop_assert!(pair[0].window.abuts(&pair[1].window) || cfg.kind == PolicyKind::P1);
        }
        for entry in entries.iter().skip(1) {
            prop_assert_eq!(entry.trigger, entry.window.start);
        }
        // coverage: union of windows contains [depart, depart+duration)
        prop_assert!(entries[0].window.start <= trip.depart);
        prop_assert!(entries.last().unwrap().window.end >= trip.depart + trip.duration);
    }

    /// Slices tile their window without gaps or overlap; P3 slices sit on
    /// the global grid with expired ones dropped.
    #[test]
    fn slice_shape(cfg in arb_policy(), trip in arb_trip()) {
        let schedule = compute_schedule(&cfg, &trip).unwrap();
        for entry in &schedule.entries {
            let slices = match slice_lifetimes(&cfg, entry.window, entry.trigger) {
                Ok(s) => s,
                Err(PolicyError::NoUsefulSlices) => {
                    prop_assert!(cfg.kind == PolicyKind::P3);
                    continue;
                }
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            };
            prop_assert!(!slices.is_empty());
            for pair in slices.windows(2) {
                prop_assert_eq!(pair[0].end, pair[1].start, "gap or overlap between slices");
            }
            match cfg.kind {
                PolicyKind::P1 | PolicyKind::P2 => {
                    prop_assert_eq!(slices[0].start, entry.window.start);
                    prop_assert_eq!(slices.last().unwrap().end, entry.window.end);
                    for s in &slices {
                        prop_assert!(s.len() <= cfg.tau_p);
                    }
                }
                PolicyKind::P3 => {
                    for s in &slices {
                        prop_assert_eq!(s.len(), cfg.tau_p);
                        prop_assert_eq!(
                            (s.start - cfg.t_date).as_millis() % cfg.tau_p.as_millis(), 0,
                            "P3 slice start off the global grid"
                        );
                        prop_assert!(s.end > entry.trigger, "expired slice not dropped");
                    }
                    prop_assert_eq!(slices.last().unwrap().end, entry.window.end);
                }
            }
        }
    }

    /// P3 inter-vehicle indistinguishability: two overlapping trips draw
    /// all their slice boundaries from one global boundary set.
    #[test]
    fn p3_boundaries_come_from_one_global_set(
        depart_a in 0u64..7_200_000,
        depart_b in 0u64..7_200_000,
        dur_a in 1u64..1_800_000,
        dur_b in 1u64..1_800_000,
    ) {
        let cfg = PolicyConfig {
            kind: PolicyKind::P3,
            gamma: DurMs::from_secs(300),
            tau_p: DurMs::from_secs(30),
            t_date: DAY,
        };
        let mut all_boundaries = std::collections::BTreeSet::new();
        for (depart, dur) in [(depart_a, dur_a), (depart_b, dur_b)] {
            let trip = TripRecord {
                vehicle_id: "x".into(),
                depart: DAY + DurMs(depart),
                duration: DurMs(dur),
            };
            for entry in compute_schedule(&cfg, &trip).unwrap().entries {
                if let Ok(slices) = slice_lifetimes(&cfg, entry.window, entry.trigger) {
                    for s in slices {
                        all_boundaries.insert(s.start);
                        all_boundaries.insert(s.end);
                    }
                }
            }
        }
        // every boundary is a multiple of tau from the anchor: the one
        // global set; no boundary is unique to either vehicle's phase
        for b in all_boundaries {
            prop_assert_eq!((b - cfg.t_date).as_millis() % cfg.tau_p.as_millis(), 0);
        }
    }
}

#[test]
fn count_law_bulk_random_sample() {
    // Denser deterministic sweep than proptest's default case count: 10 000
    // random (cfg, trip) pairs against the brute-force enumerator.
    use rand::{RngExt as _, SeedableRng as _};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(20160601);
    for i in 0..10_000 {
        let kind = match i % 3 {
            0 => PolicyKind::P1,
            1 => PolicyKind::P2,
            _ => PolicyKind::P3,
        };
        let tau = DurMs::from_secs(rng.random_range(1..=12) * 5);
        let gamma = match kind {
            PolicyKind::P3 => DurMs(tau.as_millis() * rng.random_range(1..=12)),
            _ => DurMs::from_secs(rng.random_range(60..=600)),
        };
        let cfg = PolicyConfig { kind, gamma, tau_p: tau, t_date: DAY };
        cfg.validate().unwrap();
        let trip = TripRecord {
            vehicle_id: format!("v{i}"),
            depart: DAY + DurMs(rng.random_range(0..86_400_000)),
            duration: DurMs(rng.random_range(1..3_600_000)),
        };
        let count = interactions_count(&cfg, &trip).unwrap();
        let schedule_len = compute_schedule(&cfg, &trip).unwrap().len() as u64;
        assert_eq!(count, schedule_len, "case {i}: {cfg:?} {trip:?}");
        if kind == PolicyKind::P3 {
            assert_eq!(
                count,
                grid_cells_intersecting(&trip, cfg.gamma, cfg.t_date),
                "case {i}: {cfg:?} {trip:?}"
            );
        }
    }
}
