//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line (visible with `--nocapture`). Heavy criteria serialize on
//! a global lock so latency measurements do not contend; the desk-scale
//! replay runs once and is shared by the criteria that inspect it.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::{RngExt as _, SeedableRng as _};
use rand_chacha::ChaCha12Rng;
use vpki_bench::experiment::{run_experiment, throughput_probe, ExperimentConfig, ServerSpec};
use vpki_bench::export::{self, SummaryJson};
use vpki_core::clock::VirtualClock;
use vpki_core::codec::{decode_any, encode, signed_payload};
use vpki_core::crypto::{digest, SharedRng};
use vpki_core::loopback::{LoopbackLtca, LoopbackPca};
use vpki_core::ltca::{Ltca, LtcaConfig};
use vpki_core::model::*;
use vpki_core::obu::VehicleContext;
use vpki_core::pca::{Pca, PcaConfig};
use vpki_core::policy::{self, PolicyKind, TripRecord};
use vpki_core::resolution::{resolve, ChainLink};
use vpki_core::stats::{LatencyRecord, Outcome};
use vpki_core::store::MemLog;
use vpki_core::testkit::{self, DAY};
use vpki_core::time::{DurMs, Window};
use vpki_core::trace::{synth_trace, SynthParams};
use vpki_core::transport::{LtcaRevealChannel, PcaChannel, PcaRevealChannel, TransportError};

/// Serializes the CPU-heavy criteria.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

// ---------------------------------------------------------------- loopback

struct World {
    clock: Arc<VirtualClock>,
    ltca: LoopbackLtca,
    pca: LoopbackPca,
}

fn world(tau: DurMs, gamma: DurMs) -> World {
    let clock = Arc::new(VirtualClock::starting_at(DAY));
    let ltca = Arc::new(
        Ltca::new(
            LtcaConfig::new(testkit::issuer_id(), testkit::credential()),
            testkit::ltca_keys(),
            SharedRng::system(),
            Box::new(MemLog::new()),
        )
        .unwrap(),
    );
    let trust: HashMap<IdString, _> = [(testkit::issuer_id(), testkit::ltca_keys().public)].into();
    let pca = Arc::new(
        Pca::new(
            PcaConfig::new(testkit::pca_id(), tau, gamma, DAY, testkit::credential()).unwrap(),
            testkit::pca_keys(),
            trust,
            SharedRng::system(),
            Box::new(MemLog::new()),
        )
        .unwrap(),
    );
    World {
        clock: clock.clone(),
        ltca: LoopbackLtca { ltca, clock: clock.clone() },
        pca: LoopbackPca { pca, clock },
    }
}

fn vehicle(w: &World, seed: u64, kind: PolicyKind, gamma: DurMs) -> VehicleContext {
    let rng = SharedRng::new(ChaCha12Rng::seed_from_u64(seed));
    let keys = rng.generate_keypair();
    let subject = SubjectId::from_label(&format!("acceptance-{seed}"));
    let ltc = w.ltca.ltca.register_vehicle(subject, keys.public.clone(), DAY).unwrap();
    let pca_info = w.pca.fetch_config().unwrap();
    let mut policy = VehicleContext::policy_from_pca(kind, &pca_info);
    policy.gamma = gamma;
    VehicleContext::new(ltc, keys, testkit::ltca_keys().public, policy, pca_info, rng)
}

/// Run one trip on a fresh loopback world; panics on any non-ok outcome
/// unless `allow_errors`.
fn run_one(
    w: &World,
    seed: u64,
    kind: PolicyKind,
    gamma: DurMs,
    trip: &TripRecord,
) -> (Vec<LatencyRecord>, VehicleContext) {
    let mut ctx = vehicle(w, seed, kind, gamma);
    let need = ctx.pool_requirement(trip, None).unwrap();
    ctx.fill_pool(need);
    w.clock.set(trip.depart);
    let records = ctx.run_trip(trip, None, &*w.clock, &w.ltca, &w.pca).unwrap();
    (records, ctx)
}

fn assert_covered(ctx: &VehicleContext, trip: &TripRecord) {
    let mut cursor = trip.depart;
    let end = trip.depart + trip.duration;
    for stored in ctx.pseudonym_store() {
        let w = stored.pseudonym.lifetime();
        if w.end <= cursor {
            continue;
        }
        assert!(w.start <= cursor, "coverage gap at {cursor:?} (next lifetime {w:?})");
        cursor = w.end;
        if cursor >= end {
            break;
        }
    }
    assert!(cursor >= end, "trip tail uncovered from {cursor:?} to {end:?}");
}

/// Criterion 1: 1 000 randomized acquisitions across P1/P2/P3 with random
/// parameters; zero validation failures, every pseudonym signature
/// verifies, non-overlap and coverage hold, within the two-minute budget.
#[test]
fn criterion_1_protocol_conformance() {
    let _guard = heavy();
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xAC1);
    let pca_key = testkit::pca_keys().public;

    let mut acquisitions = 0u64;
    let mut runs = 0u64;
    while acquisitions < 1000 {
        let kind = match runs % 3 {
            0 => PolicyKind::P1,
            1 => PolicyKind::P2,
            _ => PolicyKind::P3,
        };
        let tau = DurMs::from_secs(rng.random_range(10..=60));
        let gamma = match kind {
            PolicyKind::P3 => {
                let k_max = (600_000 / tau.as_millis()).max(1);
                let k_min = (60_000 / tau.as_millis()).max(1);
                DurMs(tau.as_millis() * rng.random_range(k_min..=k_max))
            }
            _ => DurMs::from_secs(rng.random_range(60..=600)),
        };
        let trip = TripRecord {
            vehicle_id: format!("c1-{runs}"),
            depart: DAY + DurMs(rng.random_range(0..86_100_000)),
            duration: DurMs(rng.random_range(1_000..=3_600_000)),
        };
        // The PCA's universal interval must be a tau multiple regardless of
        // the client's policy; only P3 clients follow it.
        let pca_gamma = match kind {
            PolicyKind::P3 => gamma,
            _ => tau * 10,
        };
        let w = world(tau, pca_gamma);
        let (records, ctx) = run_one(&w, 1000 + runs, kind, gamma, &trip);

        let expected =
            policy::interactions_count(&ctx.policy, &trip).unwrap();
        assert_eq!(records.len() as u64, expected, "conservation for {kind:?} {trip:?}");
        for record in &records {
            assert_eq!(record.outcome, Outcome::Ok, "validation failure: {record:?}");
        }
        for pair in ctx.pseudonym_store().windows(2) {
            assert!(
                !pair[0].pseudonym.lifetime().overlaps(&pair[1].pseudonym.lifetime()),
                "overlapping lifetimes under {kind:?}"
            );
        }
        assert_covered(&ctx, &trip);
        for stored in ctx.pseudonym_store() {
            assert!(
                pca_key.verify(&signed_payload(&stored.pseudonym), &stored.pseudonym.signature),
                "pseudonym signature failed independent verification"
            );
        }
        acquisitions += records.len() as u64;
        runs += 1;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() <= 120, "criterion 1 exceeded 2 min: {elapsed:?}");
    println!(
        "[PASS] criterion 1: {acquisitions} randomized acquisitions over {runs} trips, \
         zero validation failures, non-overlap and coverage held ({elapsed:?})"
    );
}

/// Criterion 2: Table-2 interaction laws for 10 000 random trips, exact,
/// plus an executed subsample grounding the recorded counts.
#[test]
fn criterion_2_interaction_laws() {
    let _guard = heavy();
    let mut rng = ChaCha12Rng::seed_from_u64(0xAC2);
    let t_date = DAY;

    let grid_oracle = |trip: &TripRecord, gamma: DurMs| -> u64 {
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
    };

    for i in 0..10_000u64 {
        let tau = DurMs::from_secs(rng.random_range(10..=60));
        let gamma_p2 = DurMs::from_secs(rng.random_range(60..=600));
        let gamma_p3 = DurMs(tau.as_millis() * rng.random_range(2..=20));
        let trip = TripRecord {
            vehicle_id: format!("c2-{i}"),
            depart: DAY + DurMs(rng.random_range(0..82_800_000)),
            duration: DurMs(rng.random_range(1..=3_600_000)),
        };

        let count = |kind, gamma| {
            let cfg = policy::PolicyConfig { kind, gamma, tau_p: tau, t_date };
            policy::interactions_count(&cfg, &trip).unwrap()
        };
        assert_eq!(count(PolicyKind::P1, gamma_p2), 1);
        assert_eq!(
            count(PolicyKind::P2, gamma_p2),
            trip.duration.div_ceil(gamma_p2),
            "P2 ceiling law for {trip:?}"
        );
        assert_eq!(
            count(PolicyKind::P3, gamma_p3),
            grid_oracle(&trip, gamma_p3),
            "P3 grid-cell law for {trip:?} gamma={gamma_p3:?}"
        );
    }

    // executed subsample: recorded acquisitions match the same laws
    let tau = DurMs::from_secs(30);
    let gamma = DurMs::from_secs(300);
    let w = world(tau, gamma);
    for i in 0..60u64 {
        let kind = match i % 3 {
            0 => PolicyKind::P1,
            1 => PolicyKind::P2,
            _ => PolicyKind::P3,
        };
        let trip = TripRecord {
            vehicle_id: format!("c2x-{i}"),
            depart: DAY + DurMs(rng.random_range(0..7_200_000)),
            duration: DurMs(rng.random_range(1_000..=1_800_000)),
        };
        let (records, _) = run_one(&w, 20_000 + i, kind, gamma, &trip);
        let expected = match kind {
            PolicyKind::P1 => 1,
            PolicyKind::P2 => trip.duration.div_ceil(gamma),
            PolicyKind::P3 => grid_oracle(&trip, gamma),
        };
        assert_eq!(records.len() as u64, expected, "recorded count for {kind:?} {trip:?}");
    }
    println!("[PASS] criterion 2: interaction laws exact on 10000 trips + 60 executed trips");
}

/// Criterion 3: with the published configuration (gamma 300 s, tau 30 s)
/// every full-interval P2/P3 request yields exactly 10 pseudonyms; P3
/// first-interval requests yield the non-expired subset per a brute-force
/// slice oracle.
#[test]
fn criterion_3_batch_size_law() {
    let _guard = heavy();
    let tau = DurMs::from_secs(30);
    let gamma = DurMs::from_secs(300);
    let w = world(tau, gamma);
    let mut rng = ChaCha12Rng::seed_from_u64(0xAC3);

    let mut full_batches = 0u64;
    let mut first_batches = 0u64;
    for i in 0..120u64 {
        let kind = if i % 2 == 0 { PolicyKind::P2 } else { PolicyKind::P3 };
        let trip = TripRecord {
            vehicle_id: format!("c3-{i}"),
            depart: DAY + DurMs(rng.random_range(0..7_200_000)),
            duration: DurMs(rng.random_range(1_000..=1_500_000)),
        };
        let (records, _) = run_one(&w, 30_000 + i, kind, gamma, &trip);
        match kind {
            PolicyKind::P2 => {
                for r in &records {
                    assert_eq!(r.n_pseudonyms, 10, "P2 request must yield gamma/tau pseudonyms");
                    full_batches += 1;
                }
            }
            PolicyKind::P3 => {
                // brute-force oracle for the first (mid-cell) interaction:
                // slices of the departure cell whose end is after departure
                let cell_start = DAY
                    + DurMs(
                        trip.depart.saturating_since(DAY).as_millis() / gamma.as_millis()
                            * gamma.as_millis(),
                    );
                let mut expected_first = 0u32;
                let mut s = cell_start;
                while s < cell_start + gamma {
                    if s + tau > trip.depart {
                        expected_first += 1;
                    }
                    s = s + tau;
                }
                assert_eq!(records[0].n_pseudonyms, expected_first, "P3 first interval");
                first_batches += 1;
                for r in &records[1..] {
                    assert_eq!(r.n_pseudonyms, 10, "P3 full grid cell must yield 10");
                    full_batches += 1;
                }
            }
            PolicyKind::P1 => unreachable!(),
        }
    }
    println!(
        "[PASS] criterion 3: {full_batches} full-interval batches of exactly 10, \
         {first_batches} P3 first intervals matched the slice oracle"
    );
}

// ------------------------------------------------------------- desk scale

struct DeskScale {
    dir: tempfile::TempDir,
    records: Vec<LatencyRecord>,
    summary: SummaryJson,
    error_rate: f64,
    sustained_ok_per_sec: f64,
    overlap_violations: u64,
    expected_acquisitions: u64,
    residues: BTreeSet<u64>,
    elapsed: std::time::Duration,
}

static DESK: OnceLock<DeskScale> = OnceLock::new();

fn desk_scale() -> &'static DeskScale {
    DESK.get_or_init(|| {
        let started = Instant::now();
        let origin = DAY + DurMs::from_secs(6 * 3600);
        let params = SynthParams::new(
            10_000,
            DurMs::from_secs(7200),
            DurMs::from_secs(590),
            42,
        );
        let trips = synth_trace(&params, origin);
        let mut config = ExperimentConfig::new(trips, PolicyKind::P3, origin);
        config.gamma = DurMs::from_secs(300);
        config.tau = DurMs::from_secs(30);
        config.compression = 60.0;
        config.seed = 42;
        let dir = tempfile::tempdir().expect("tempdir");
        config.servers = ServerSpec::Launch { state_dir: Some(dir.path().join("state")) };

        let output = run_experiment(&config).expect("desk-scale replay");
        export::export(&output, dir.path()).expect("export");
        let elapsed = started.elapsed();

        let records_text =
            std::fs::read_to_string(dir.path().join("records.csv")).expect("records.csv");
        let records = export::parse_records(&records_text).expect("re-parse records");
        let summary: SummaryJson = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("summary.json")).expect("summary.json"),
        )
        .expect("parse summary.json");

        DeskScale {
            records,
            summary,
            error_rate: output.error_rate,
            sustained_ok_per_sec: output.sustained_ok_per_sec,
            overlap_violations: output.audit.overlap_violations,
            expected_acquisitions: output.audit.expected_acquisitions,
            residues: output.audit.boundary_residues_mod_tau.clone(),
            elapsed,
            dir,
        }
    })
}

/// Independent sort-based oracle over the re-parsed records.
fn oracle_summary(records: &[LatencyRecord]) -> SummaryJson {
    let values: Vec<f64> =
        records.iter().filter(|r| r.outcome.is_ok()).map(|r| r.e2e_ms).collect();
    let n = values.len();
    assert!(n > 0);
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let rank = (0.99 * n as f64).ceil() as usize;
    SummaryJson {
        max_ms: sorted[n - 1],
        min_ms: sorted[0],
        avg_ms: mean,
        std_dev_ms: variance.sqrt(),
        variance,
        p99_ms: sorted[rank.clamp(1, n) - 1],
        count: n as u64,
    }
}

fn assert_rel(name: &str, actual: f64, expected: f64) {
    let denom = expected.abs().max(1e-300);
    let rel = (actual - expected).abs() / denom;
    assert!(rel <= 1e-9, "{name}: {actual} vs oracle {expected} (rel {rel:.3e})");
}

/// Criterion 4: the 10 000-trip desk-scale replay (2 h window, 60x
/// compression, P3) completes fault-free, emits the output files, and the
/// exported summary matches an independent sort-based oracle to 1e-9.
#[test]
fn criterion_4_desk_scale_replay() {
    let _guard = heavy();
    let desk = desk_scale();

    assert_eq!(desk.error_rate, 0.0, "desk-scale run must be fault-free");
    assert!(desk.records.iter().all(|r| r.outcome.is_ok()));
    for name in ["records.csv", "series.csv", "summary.json", "config.json"] {
        assert!(desk.dir.path().join(name).exists(), "missing output file {name}");
    }
    assert_eq!(desk.overlap_violations, 0);
    assert_eq!(
        desk.records.len() as u64,
        desk.expected_acquisitions,
        "conservation: one record per planned interaction"
    );
    assert_eq!(desk.residues, BTreeSet::from([0]), "P3 boundaries off the global grid");

    let oracle = oracle_summary(&desk.records);
    assert_eq!(desk.summary.count, oracle.count);
    assert_rel("max_ms", desk.summary.max_ms, oracle.max_ms);
    assert_rel("min_ms", desk.summary.min_ms, oracle.min_ms);
    assert_rel("avg_ms", desk.summary.avg_ms, oracle.avg_ms);
    assert_rel("std_dev_ms", desk.summary.std_dev_ms, oracle.std_dev_ms);
    assert_rel("variance", desk.summary.variance, oracle.variance);
    assert_rel("p99_ms", desk.summary.p99_ms, oracle.p99_ms);

    assert!(
        desk.elapsed.as_secs() <= 600,
        "desk-scale run took {:?}, budget is 10 min",
        desk.elapsed
    );
    println!(
        "[PASS] criterion 4: {} acquisitions, error rate 0, summary matches oracle, \
         completed in {:?}",
        desk.records.len(),
        desk.elapsed
    );
}

/// Criterion 5: absolute paper latencies are hardware-bound and not
/// reproduced; instead the replay's p99 is finite and reported, sustained
/// and saturation throughput are measured and documented, and the
/// qualitative P2-variance-below-P1 ordering is checked and reported
/// (informative, non-gating).
#[test]
fn criterion_5_latency_reporting_and_throughput() {
    let _guard = heavy();
    let desk = desk_scale();
    assert!(desk.summary.p99_ms.is_finite() && desk.summary.p99_ms > 0.0);
    println!(
        "[INFO] criterion 5: desk-scale p99 = {:.2} ms (avg {:.2} ms, max {:.2} ms); \
         table-5 absolute values are 2016-testbed-specific and intentionally not asserted",
        desk.summary.p99_ms, desk.summary.avg_ms, desk.summary.max_ms
    );

    let probe = throughput_probe(800, 32, DurMs::from_secs(30), DurMs::from_secs(300), 7)
        .expect("throughput probe");
    assert_eq!(probe.ok, probe.attempted, "probe acquisitions must all succeed");
    assert!(probe.per_sec > 0.0);
    println!(
        "[INFO] criterion 5: sustained replay throughput {:.1} ok/s; saturation probe {:.1} \
         acquisitions/s over {} acquisitions",
        desk.sustained_ok_per_sec, probe.per_sec, probe.attempted
    );
    if probe.per_sec >= 500.0 {
        println!("[INFO] criterion 5: >= 500 acquisitions/s demonstrated");
    } else {
        println!(
            "[INFO] criterion 5: measured maximum documented ({:.1}/s on this hardware)",
            probe.per_sec
        );
    }

    // qualitative contrast on one mixed-duration trace (informative)
    let tau = DurMs::from_secs(30);
    let gamma = DurMs::from_secs(300);
    let params = SynthParams::new(200, DurMs::from_secs(1800), DurMs::from_secs(590), 11);
    let trips = synth_trace(&params, DAY);
    let mut stats = Vec::new();
    for kind in [PolicyKind::P1, PolicyKind::P2] {
        let w = world(tau, gamma);
        let mut all = Vec::new();
        for (i, trip) in trips.iter().enumerate() {
            let (records, _) = run_one(&w, 50_000 + i as u64, kind, gamma, trip);
            all.extend(records);
        }
        stats.push(vpki_core::stats::summary_stats(&all).unwrap());
    }
    let (p1, p2) = (&stats[0], &stats[1]);
    let ordering_holds = p2.std_dev_ms < p1.std_dev_ms;
    println!(
        "[INFO] criterion 5 (non-gating): latency std dev P1 {:.3} ms vs P2 {:.3} ms -> \
         fixed-size P2 batches {} lower variance on this run",
        p1.std_dev_ms,
        p2.std_dev_ms,
        if ordering_holds { "showed the expected" } else { "did NOT show the expected" }
    );
    println!("[PASS] criterion 5: p99 finite and reported; throughput documented");
}

// ------------------------------------------------------------- resolution

struct SwappedPcaReveal<'a> {
    inner: &'a LoopbackPca,
    substitute: u64,
}

impl PcaRevealChannel for SwappedPcaReveal<'_> {
    fn reveal_pseudonym(
        &self,
        _serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealPsnymResponse, TransportError> {
        self.inner.reveal_pseudonym(self.substitute, credential)
    }
}

struct SwappedLtcaReveal<'a> {
    inner: &'a LoopbackLtca,
    wrong_ltc: LongTermCertificate,
}

impl LtcaRevealChannel for SwappedLtcaReveal<'_> {
    fn reveal_ticket(
        &self,
        serial: u64,
        credential: &RaCredential,
    ) -> Result<RevealTicketResponse, TransportError> {
        let mut res = self.inner.reveal_ticket(serial, credential)?;
        res.ltc = self.wrong_ltc.clone();
        res.ltc_digest = digest(&encode(&self.wrong_ltc));
        Ok(res)
    }
}

/// Criterion 6: resolution succeeds for 100 honestly issued pseudonyms and
/// detects both fault-injected equivocations in 100/100 trials.
#[test]
fn criterion_6_binding_chain_soundness() {
    let _guard = heavy();
    let tau = DurMs::from_secs(30);
    let gamma = DurMs::from_secs(300);
    let w = world(tau, gamma);
    let mut rng = ChaCha12Rng::seed_from_u64(0xAC6);

    // 100 pseudonyms from ten vehicles, ten slices each
    let mut pseudonyms = Vec::new();
    let mut ltc_digests = Vec::new();
    let mut decoy_ltc = None;
    for i in 0..10u64 {
        let trip = TripRecord {
            vehicle_id: format!("c6-{i}"),
            depart: DAY + DurMs(rng.random_range(0..3_600_000)),
            duration: DurMs::from_secs(299),
        };
        let (records, ctx) = run_one(&w, 60_000 + i, PolicyKind::P2, gamma, &trip);
        assert!(records.iter().all(|r| r.outcome.is_ok()));
        let expected_digest = digest(&encode(&ctx.ltc));
        for stored in ctx.pseudonym_store() {
            pseudonyms.push(stored.pseudonym.clone());
            ltc_digests.push(expected_digest);
        }
        decoy_ltc = Some(ctx.ltc.clone());
    }
    assert_eq!(pseudonyms.len(), 100);
    let decoy_ltc = decoy_ltc.unwrap();

    // honest-chain completeness
    for (pseudonym, expected_digest) in pseudonyms.iter().zip(&ltc_digests) {
        let result = resolve(pseudonym, &w.pca, &w.ltca, &testkit::credential()).unwrap();
        assert!(result.chain_valid(), "honest resolution failed for {pseudonym:?}");
        assert_eq!(result.ltc_digest, *expected_digest);
    }

    // equivocation soundness: substituted pseudonym binding at the PCA
    let mut pca_detected = 0;
    for (i, pseudonym) in pseudonyms.iter().enumerate() {
        // substitute the binding of a pseudonym from a different vehicle
        let substitute = pseudonyms[(i + 10) % pseudonyms.len()].serial;
        let swapped = SwappedPcaReveal { inner: &w.pca, substitute };
        let result = resolve(pseudonym, &swapped, &w.ltca, &testkit::credential()).unwrap();
        if !result.chain_valid() && result.mismatch() == Some(ChainLink::Pca) {
            pca_detected += 1;
        }
    }
    assert_eq!(pca_detected, 100, "every PCA equivocation must be detected");

    // equivocation soundness: wrong LTC revealed at the LTCA
    let mut ltca_detected = 0;
    for (i, pseudonym) in pseudonyms.iter().enumerate() {
        if ltc_digests[i] == digest(&encode(&decoy_ltc)) {
            // pick a decoy belonging to a different vehicle
            continue;
        }
        let swapped = SwappedLtcaReveal { inner: &w.ltca, wrong_ltc: decoy_ltc.clone() };
        let result = resolve(pseudonym, &w.pca, &swapped, &testkit::credential()).unwrap();
        if !result.chain_valid() && result.mismatch() == Some(ChainLink::Ltca) {
            ltca_detected += 1;
        }
    }
    assert_eq!(ltca_detected, 90, "every LTCA equivocation must be detected");
    // the ten skipped above belong to the decoy's own vehicle; swap them
    // against a second decoy to reach 100/100 trials
    let second_decoy = {
        let trip = TripRecord {
            vehicle_id: "c6-decoy".into(),
            depart: DAY,
            duration: DurMs::from_secs(30),
        };
        let (_, ctx) = run_one(&w, 61_000, PolicyKind::P1, gamma, &trip);
        ctx.ltc.clone()
    };
    let mut remainder = 0;
    for (i, pseudonym) in pseudonyms.iter().enumerate() {
        if ltc_digests[i] != digest(&encode(&decoy_ltc)) {
            continue;
        }
        let swapped = SwappedLtcaReveal { inner: &w.ltca, wrong_ltc: second_decoy.clone() };
        let result = resolve(pseudonym, &w.pca, &swapped, &testkit::credential()).unwrap();
        assert!(!result.chain_valid() && result.mismatch() == Some(ChainLink::Ltca));
        remainder += 1;
    }
    assert_eq!(ltca_detected + remainder, 100);
    println!(
        "[PASS] criterion 6: 100/100 honest resolutions, 100/100 PCA equivocations and \
         100/100 LTCA equivocations detected"
    );
}

/// Criterion 7: over a 1 000-vehicle P3 run all lifetime boundaries are
/// congruent to t_date modulo tau (residue set {0}); a matched P1 run with
/// uniformly random departures spreads over more than one residue class.
#[test]
fn criterion_7_p3_alignment_privacy() {
    let _guard = heavy();
    let tau = DurMs::from_secs(30);
    let gamma = DurMs::from_secs(300);
    let mut rng = ChaCha12Rng::seed_from_u64(0xAC7);
    let trips: Vec<TripRecord> = (0..1000)
        .map(|i| TripRecord {
            vehicle_id: format!("c7-{i}"),
            depart: DAY + DurMs(rng.random_range(0..7_200_000)),
            duration: DurMs(rng.random_range(30_000..300_000)),
        })
        .collect();

    let residues_for = |kind: PolicyKind| -> BTreeSet<u64> {
        let w = world(tau, gamma);
        let mut residues = BTreeSet::new();
        for (i, trip) in trips.iter().enumerate() {
            let (records, ctx) = run_one(&w, 70_000 + i as u64, kind, gamma, trip);
            assert!(records.iter().all(|r| r.outcome.is_ok()));
            for stored in ctx.pseudonym_store() {
                for b in [stored.pseudonym.t_s, stored.pseudonym.t_e] {
                    residues.insert(b.saturating_since(DAY).as_millis() % tau.as_millis());
                }
            }
        }
        residues
    };

    let p3 = residues_for(PolicyKind::P3);
    assert_eq!(p3, BTreeSet::from([0]), "P3 boundaries must all sit on the global grid");

    let p1 = residues_for(PolicyKind::P1);
    assert!(
        p1.len() > 1,
        "P1 with random departures must spread boundaries over several residue classes"
    );
    println!(
        "[PASS] criterion 7: P3 residue set {{0}} over 1000 vehicles; P1 contrast has {} \
         residue classes",
        p1.len()
    );
}

/// Criterion 8: frozen golden vectors for every message type round-trip
/// bit-exactly and the signed payload is a stable prefix.
#[test]
fn criterion_8_codec_golden_vectors() {
    let golden_dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/golden");
    let entries: Vec<_> = std::fs::read_dir(&golden_dir)
        .expect("golden vector directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "hex"))
        .collect();
    assert_eq!(entries.len(), 16, "one golden vector per message type");

    for path in &entries {
        let bytes = hex::decode(std::fs::read_to_string(path).unwrap().trim()).unwrap();
        let msg = decode_any(&bytes)
            .unwrap_or_else(|e| panic!("{} failed to decode: {e}", path.display()));
        // re-encode bit-exactly
        let reencoded = match &msg {
            vpki_core::codec::AnyMessage::LongTermCertificate(m) => encode(m),
            vpki_core::codec::AnyMessage::Ticket(m) => encode(m),
            vpki_core::codec::AnyMessage::Pseudonym(m) => encode(m),
            vpki_core::codec::AnyMessage::TicketRequest(m) => encode(m),
            vpki_core::codec::AnyMessage::TicketResponse(m) => encode(m),
            vpki_core::codec::AnyMessage::PsnymRequest(m) => encode(m),
            vpki_core::codec::AnyMessage::PsnymResponse(m) => encode(m),
            vpki_core::codec::AnyMessage::ConfigRequest(m) => encode(m),
            vpki_core::codec::AnyMessage::ConfigResponse(m) => encode(m),
            vpki_core::codec::AnyMessage::RegisterRequest(m) => encode(m),
            vpki_core::codec::AnyMessage::RegisterResponse(m) => encode(m),
            vpki_core::codec::AnyMessage::RevealTicketRequest(m) => encode(m),
            vpki_core::codec::AnyMessage::RevealTicketResponse(m) => encode(m),
            vpki_core::codec::AnyMessage::RevealPsnymRequest(m) => encode(m),
            vpki_core::codec::AnyMessage::RevealPsnymResponse(m) => encode(m),
            vpki_core::codec::AnyMessage::Error(m) => encode(m),
        };
        assert_eq!(reencoded, bytes, "round trip drift for {}", path.display());
    }

    // signed-payload stability: the golden ticket request's signature
    // verifies over the prefix, and the prefix is signature-independent
    let f = testkit::fixtures();
    let payload = signed_payload(&f.ticket_request);
    assert_eq!(&encode(&f.ticket_request)[..payload.len()], payload.as_slice());
    let mut resigned = f.ticket_request.clone();
    resigned.signature = vpki_core::crypto::Signature([0xEE; 64]);
    assert_eq!(signed_payload(&resigned), payload);
    assert!(testkit::vehicle_keys().public.verify(&payload, &f.ticket_request.signature));
    println!("[PASS] criterion 8: 16 golden vectors round-trip bit-exactly");
}

/// Criterion 9: published SHA-256 and RFC 6979 P-256 vectors reproduce
/// exactly.
#[test]
fn criterion_9_crypto_vectors() {
    assert_eq!(
        hex::encode(digest(b"").0),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
    assert_eq!(
        hex::encode(digest(b"abc").0),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );

    let key: [u8; 32] =
        hex::decode("C9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721")
            .unwrap()
            .try_into()
            .unwrap();
    let pair = vpki_core::crypto::KeyPair::from_private_bytes(&key).unwrap();
    let sig = pair.private.sign(b"test");
    assert_eq!(
        hex::encode(sig.as_bytes()).to_uppercase(),
        "F1ABB023518351CD71D881567B1EA663ED3EFCF6C5132B354F28D3B0B7D38367\
         019F4113742A2B14BD25926B49C649155F267E60D3814B4C0CC84250E46F0083"
    );
    assert!(pair.public.verify(b"test", &sig));
    println!("[PASS] criterion 9: FIPS 180-4 and RFC 6979 vectors reproduced exactly");
}
