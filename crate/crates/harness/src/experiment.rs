//! Trace replay: every trip becomes a vehicle thread that executes its
//! acquisition schedule against the services under compressed simulated
//! time. Latencies are always raw wall clock; only trigger scheduling is
//! compressed.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, OnceLock};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use vpki_core::clock::{Clock, SimClock, SystemClock};
use vpki_core::crypto::{generate_keypair, SharedRng};
use vpki_core::model::{ConfigResponse, SubjectId};
use vpki_core::obu::VehicleContext;
use vpki_core::policy::{self, PolicyConfig, PolicyKind, TripRecord};
use vpki_core::stats::{per_minute_series, summary_stats, LatencyRecord, MinuteBucket, StatsSummary};
use vpki_core::time::{DurMs, TimeMs, Window};
use vpki_core::transport::{LtcaChannel, PcaChannel, TransportError};
use vpki_net::client::{register_vehicles, Endpoint, TlsLtcaChannel, TlsPcaChannel};
use vpki_net::tls::{self, TlsMaterial};

use crate::launch::{self, LaunchParams};

/// A simulated clock that sits frozen at its origin until `start`, so
/// setup work (registration, pool filling) consumes no simulated time.
pub struct ReplayClock {
    origin: TimeMs,
    factor: f64,
    started: OnceLock<SimClock>,
}

impl ReplayClock {
    pub fn new(origin: TimeMs, factor: f64) -> Self {
        ReplayClock { origin, factor, started: OnceLock::new() }
    }

    pub fn start(&self) {
        let _ = self.started.set(SimClock::start_at(self.origin, self.factor));
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl Clock for ReplayClock {
    fn now(&self) -> TimeMs {
        match self.started.get() {
            Some(clock) => clock.now(),
            None => self.origin,
        }
    }

    fn wait_until(&self, t: TimeMs) {
        if let Some(clock) = self.started.get() {
            clock.wait_until(t);
        }
    }
}

/// Where the services come from.
pub enum ServerSpec {
    /// Start both services in-process on loopback TLS.
    Launch { state_dir: Option<std::path::PathBuf> },
    /// Connect to already-running services. The LTCA's application-layer
    /// public key (hex, SEC1 compressed) lets vehicles verify tickets.
    Remote {
        ltca_addr: String,
        pca_addr: String,
        tls_dir: std::path::PathBuf,
        server_name: String,
        ltca_public_key_hex: String,
    },
}

pub struct ExperimentConfig {
    pub trips: Vec<TripRecord>,
    pub policy: PolicyKind,
    /// P2 refill interval; in launch mode also the PCA's universal
    /// interval.
    pub gamma: DurMs,
    pub tau: DurMs,
    /// Simulated-time speedup applied to trigger scheduling.
    pub compression: f64,
    pub seed: u64,
    pub servers: ServerSpec,
    /// Abort issuing new work once the error fraction exceeds this bound
    /// (1.0 disables).
    pub error_abort_rate: f64,
    /// Trace origin: minute buckets are relative to this instant.
    pub origin: TimeMs,
    /// Midnight anchor for the P3 grid.
    pub t_date: TimeMs,
}

impl ExperimentConfig {
    pub fn new(trips: Vec<TripRecord>, policy: PolicyKind, origin: TimeMs) -> Self {
        let t_date = TimeMs(origin.as_millis() - origin.as_millis() % 86_400_000);
        ExperimentConfig {
            trips,
            policy,
            gamma: DurMs::from_secs(300),
            tau: DurMs::from_secs(30),
            compression: 60.0,
            seed: 42,
            servers: ServerSpec::Launch { state_dir: None },
            error_abort_rate: 1.0,
            origin,
            t_date,
        }
    }
}

/// Post-replay invariants and privacy metrics.
#[derive(Debug, Default, Serialize)]
pub struct ExperimentAudit {
    pub total_pseudonyms: u64,
    /// Pairs of overlapping lifetimes within one vehicle-trip (must be 0).
    pub overlap_violations: u64,
    /// Simulated milliseconds of trip time not covered by any acquired
    /// pseudonym lifetime (late or failed acquisitions).
    pub coverage_gap_ms: u64,
    pub trips_with_gaps: u64,
    /// Distinct lifetime-boundary residues modulo tau, relative to t_date.
    pub boundary_residues_mod_tau: BTreeSet<u64>,
    /// Sum of per-trip interaction counts predicted by the policy table.
    pub expected_acquisitions: u64,
    pub residual_acquisitions: u64,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub policy: String,
    pub gamma_ms: u64,
    pub tau_ms: u64,
    pub compression: f64,
    pub seed: u64,
    pub trips: usize,
    pub origin_ms: u64,
    pub t_date_ms: u64,
    pub ltca_addr: String,
    pub pca_addr: String,
}

pub struct ExperimentOutput {
    pub records: Vec<LatencyRecord>,
    pub summary: Option<StatsSummary>,
    pub series: Vec<MinuteBucket>,
    pub audit: ExperimentAudit,
    pub error_rate: f64,
    pub replay_wall: Duration,
    /// Completed acquisitions per wall second over the replay phase.
    pub sustained_ok_per_sec: f64,
    pub config_echo: ConfigEcho,
}

/// Channel wrappers that fail fast once the experiment aborts.
#[derive(Clone)]
struct AbortGate<C> {
    inner: C,
    aborted: Arc<AtomicBool>,
}

impl<C> AbortGate<C> {
    fn check(&self) -> Result<(), TransportError> {
        if self.aborted.load(Ordering::Relaxed) {
            Err(TransportError::Io("experiment aborted: error rate above bound".into()))
        } else {
            Ok(())
        }
    }
}

impl<C: LtcaChannel> LtcaChannel for AbortGate<C> {
    fn request_ticket(
        &self,
        req: &vpki_core::model::TicketRequest,
    ) -> Result<vpki_core::model::TicketResponse, TransportError> {
        self.check()?;
        self.inner.request_ticket(req)
    }
}

impl<C: PcaChannel> PcaChannel for AbortGate<C> {
    fn fetch_config(&self) -> Result<ConfigResponse, TransportError> {
        self.check()?;
        self.inner.fetch_config()
    }

    fn request_pseudonyms(
        &self,
        req: &vpki_core::model::PsnymRequest,
    ) -> Result<vpki_core::model::PsnymResponse, TransportError> {
        self.check()?;
        self.inner.request_pseudonyms(req)
    }
}

struct TripAudit {
    pseudonyms: u64,
    overlaps: u64,
    gap_ms: u64,
    residues: BTreeSet<u64>,
}

fn audit_trip(ctx: &VehicleContext, trip: &TripRecord, tau: DurMs, t_date: TimeMs) -> TripAudit {
    let store = ctx.pseudonym_store();
    let mut overlaps = 0;
    for pair in store.windows(2) {
        if pair[0].pseudonym.lifetime().overlaps(&pair[1].pseudonym.lifetime()) {
            overlaps += 1;
        }
    }
    // uncovered simulated time within the trip interval
    let mut gap_ms = 0;
    let mut cursor = trip.depart;
    let trip_end = trip.depart + trip.duration;
    for stored in store {
        let w = stored.pseudonym.lifetime();
        if w.end <= cursor {
            continue;
        }
        if w.start > cursor {
            gap_ms += (w.start.min(trip_end) - cursor).as_millis();
        }
        cursor = cursor.max(w.end);
        if cursor >= trip_end {
            break;
        }
    }
    if cursor < trip_end {
        gap_ms += (trip_end - cursor).as_millis();
    }
    let mut residues = BTreeSet::new();
    for stored in store {
        for b in [stored.pseudonym.t_s, stored.pseudonym.t_e] {
            residues.insert(b.saturating_since(t_date).as_millis() % tau.as_millis());
        }
    }
    TripAudit { pseudonyms: store.len() as u64, overlaps, gap_ms, residues }
}

/// Channels plus whatever keeps the deployment alive.
struct Services {
    ltca_channel: TlsLtcaChannel,
    pca_channel: TlsPcaChannel,
    ltca_key: vpki_core::crypto::PublicKey,
    deployment: Option<launch::Deployment>,
    ltca_addr: String,
    pca_addr: String,
}

fn connect_services(
    cfg: &ExperimentConfig,
    clock: Arc<ReplayClock>,
) -> Result<Services> {
    match &cfg.servers {
        ServerSpec::Launch { state_dir } => {
            let scaled = |secs: u64| {
                DurMs((secs as f64 * 1000.0 * cfg.compression).round() as u64)
            };
            let params = LaunchParams {
                issuer_id: crate::config::id_string("ltca.bench")?,
                pca_id: crate::config::id_string("pca.bench")?,
                tau: cfg.tau,
                gamma: cfg.gamma,
                t_date: cfg.t_date,
                skew: scaled(60),
                grace: scaled(60),
                credential: vpki_core::model::RaCredential([0xB0; 32]),
                state_dir: state_dir.clone(),
                seed: cfg.seed,
            };
            let deployment = launch::launch(&params, clock)?;
            Ok(Services {
                ltca_channel: deployment.ltca_channel.clone(),
                pca_channel: deployment.pca_channel.clone(),
                ltca_key: deployment.ltca.public_key().clone(),
                ltca_addr: deployment.ltca_addr(),
                pca_addr: deployment.pca_addr(),
                deployment: Some(deployment),
            })
        }
        ServerSpec::Remote { ltca_addr, pca_addr, tls_dir, server_name, ltca_public_key_hex } => {
            let material = TlsMaterial::load(tls_dir)
                .with_context(|| format!("loading TLS material from {}", tls_dir.display()))?;
            let mutual = tls::client_config_mutual(&material.ca_cert_pem, &material.client)?;
            let plain = tls::client_config_plain(&material.ca_cert_pem)?;
            Ok(Services {
                ltca_channel: TlsLtcaChannel {
                    endpoint: Endpoint::new(ltca_addr.clone(), server_name.clone(), mutual),
                },
                pca_channel: TlsPcaChannel {
                    endpoint: Endpoint::new(pca_addr.clone(), server_name.clone(), plain),
                },
                ltca_key: crate::config::parse_public_key(ltca_public_key_hex)?,
                deployment: None,
                ltca_addr: ltca_addr.clone(),
                pca_addr: pca_addr.clone(),
            })
        }
    }
}

/// Build and provision one vehicle context per trip (keys, registration,
/// pre-filled pools) before any clock starts.
fn provision_fleet(
    cfg: &ExperimentConfig,
    services: &Services,
    pca_info: &ConfigResponse,
) -> Result<Vec<(TripRecord, VehicleContext)>> {
    use rand_core::SeedableRng as _;

    let policy = PolicyConfig {
        kind: cfg.policy,
        gamma: match cfg.policy {
            PolicyKind::P3 => DurMs(pca_info.gamma_p3.as_millis()),
            _ => cfg.gamma,
        },
        tau_p: DurMs(pca_info.tau_p.as_millis()),
        t_date: pca_info.t_date,
    };
    policy.validate().map_err(|e| anyhow::anyhow!("invalid policy configuration: {e}"))?;

    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2);
    let chunk = cfg.trips.len().div_ceil(threads);
    let skew = DurMs((60_000.0 * cfg.compression).round() as u64);

    let mut fleet: Vec<Option<(TripRecord, VehicleContext)>> = Vec::new();
    fleet.resize_with(cfg.trips.len(), || None);
    let slots: Vec<_> = fleet.chunks_mut(chunk.max(1)).collect();

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (chunk_idx, slot) in slots.into_iter().enumerate() {
            let trips = &cfg.trips;
            let services = &services;
            let policy = &policy;
            handles.push(scope.spawn(move || -> Result<()> {
                let base = chunk_idx * chunk.max(1);
                let mut rng =
                    rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed ^ (base as u64) << 20);
                // registrations for this chunk ride one persistent session
                // in remote mode; launch mode registers directly
                let mut pending: Vec<(SubjectId, vpki_core::crypto::PublicKey)> = Vec::new();
                let mut keys_by_slot = Vec::new();
                for (offset, trip) in trips[base..].iter().take(slot.len()).enumerate() {
                    let keys = generate_keypair(&mut rng);
                    let subject =
                        SubjectId::from_label(&format!("{}#{}", trip.vehicle_id, base + offset));
                    pending.push((subject, keys.public.clone()));
                    keys_by_slot.push(keys);
                }
                let ltcs = match &services.deployment {
                    Some(deployment) => {
                        let mut ltcs = Vec::with_capacity(pending.len());
                        for (subject, public) in &pending {
                            ltcs.push(deployment.ltca.register_vehicle(
                                *subject,
                                public.clone(),
                                cfg.origin,
                            )?);
                        }
                        ltcs
                    }
                    None => register_vehicles(&services.ltca_channel.endpoint, &pending)?,
                };
                let ltca_key = services.ltca_key.clone();
                for (offset, ((trip, keys), ltc)) in trips[base..]
                    .iter()
                    .zip(keys_by_slot)
                    .zip(ltcs)
                    .take(slot.len())
                    .enumerate()
                {
                    let mut ctx = VehicleContext::new(
                        ltc,
                        keys,
                        ltca_key.clone(),
                        *policy,
                        pca_info.clone(),
                        SharedRng::new(rand_chacha::ChaCha12Rng::seed_from_u64(
                            cfg.seed ^ ((base + offset) as u64),
                        )),
                    );
                    ctx.skew = skew;
                    let need = ctx
                        .pool_requirement(trip, None)
                        .map_err(|e| anyhow::anyhow!("pool sizing failed: {e}"))?;
                    ctx.fill_pool(need);
                    slot[offset] = Some((trip.clone(), ctx));
                }
                Ok(())
            }));
        }
        for handle in handles {
            handle.join().expect("provisioning thread panicked")?;
        }
        Ok(())
    })?;

    Ok(fleet.into_iter().map(|slot| slot.expect("all slots provisioned")).collect())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.trips.is_empty() {
        bail!("no trips to replay");
    }
    if cfg.compression <= 0.0 {
        bail!("compression factor must be positive");
    }

    let clock = Arc::new(ReplayClock::new(cfg.origin, cfg.compression));
    let services = connect_services(cfg, clock.clone())?;
    let pca_info = services.pca_channel.fetch_config()?;
    if pca_info.tau_p.as_millis() != cfg.tau.as_millis() {
        warn!(
            "PCA advertises tau_p {} ms, experiment requested {} ms; using the PCA's value",
            pca_info.tau_p.as_millis(),
            cfg.tau.as_millis()
        );
    }

    info!("provisioning {} vehicle contexts", cfg.trips.len());
    let fleet = provision_fleet(cfg, &services, &pca_info)?;

    // conservation prediction from the policy table
    let policy = fleet[0].1.policy;
    let mut expected = 0u64;
    for trip in &cfg.trips {
        expected += policy::interactions_count(&policy, trip)
            .map_err(|e| anyhow::anyhow!("interaction count failed: {e}"))?;
    }

    let aborted = Arc::new(AtomicBool::new(false));
    let errors = Arc::new(AtomicU64::new(0));
    let completed = Arc::new(AtomicU64::new(0));
    let (sink, drain) = mpsc::channel::<(Vec<LatencyRecord>, TripAudit)>();

    info!("starting replay of {} trips at {}x compression", fleet.len(), cfg.compression);
    let replay_started = Instant::now();
    clock.start();

    let tau = DurMs(pca_info.tau_p.as_millis());
    let t_date = pca_info.t_date;
    let total_trips = fleet.len();
    let mut join_handles = Vec::with_capacity(total_trips);
    for (trip, mut ctx) in fleet {
        // admit each trip shortly before departure to keep the thread
        // population near the number of concurrently active vehicles
        clock.wait_until(trip.depart - DurMs(1000).min(DurMs(trip.depart.as_millis())));
        let clock = clock.clone();
        let ltca = AbortGate { inner: services.ltca_channel.clone(), aborted: aborted.clone() };
        let pca = AbortGate { inner: services.pca_channel.clone(), aborted: aborted.clone() };
        let sink = sink.clone();
        let errors = errors.clone();
        let completed = completed.clone();
        let abort_flag = aborted.clone();
        let abort_rate = cfg.error_abort_rate;
        let handle = std::thread::Builder::new()
            .stack_size(512 * 1024)
            .name(format!("trip-{}", trip.vehicle_id))
            .spawn(move || {
                let records = ctx
                    .run_trip(&trip, None, &*clock, &ltca, &pca)
                    .expect("schedule computation cannot fail for validated trips");
                for record in &records {
                    completed.fetch_add(1, Ordering::Relaxed);
                    if !record.outcome.is_ok() {
                        let errs = errors.fetch_add(1, Ordering::Relaxed) + 1;
                        let done = completed.load(Ordering::Relaxed);
                        if abort_rate < 1.0 && (errs as f64) / (done as f64) > abort_rate {
                            abort_flag.store(true, Ordering::Relaxed);
                        }
                    }
                }
                let audit = audit_trip(&ctx, &trip, tau, t_date);
                let _ = sink.send((records, audit));
            })
            .expect("spawning trip thread");
        join_handles.push(handle);
    }
    drop(sink);

    let mut records = Vec::with_capacity(expected as usize);
    let mut audit = ExperimentAudit { expected_acquisitions: expected, ..Default::default() };
    for (trip_records, trip_audit) in drain {
        audit.total_pseudonyms += trip_audit.pseudonyms;
        audit.overlap_violations += trip_audit.overlaps;
        audit.coverage_gap_ms += trip_audit.gap_ms;
        if trip_audit.gap_ms > 0 {
            audit.trips_with_gaps += 1;
        }
        audit.boundary_residues_mod_tau.extend(trip_audit.residues);
        records.extend(trip_records);
    }
    for handle in join_handles {
        handle.join().expect("trip thread panicked");
    }
    let replay_wall = replay_started.elapsed();

    audit.residual_acquisitions = records
        .iter()
        .filter(|r| r.outcome == vpki_core::stats::Outcome::OkResidual)
        .count() as u64;
    let ok = records.iter().filter(|r| r.outcome.is_ok()).count();
    let error_rate = 1.0 - ok as f64 / records.len().max(1) as f64;
    let summary = summary_stats(&records).ok();
    let series = per_minute_series(&records, cfg.origin);

    Ok(ExperimentOutput {
        sustained_ok_per_sec: ok as f64 / replay_wall.as_secs_f64(),
        summary,
        series,
        error_rate,
        replay_wall,
        config_echo: ConfigEcho {
            policy: cfg.policy.as_str().to_owned(),
            gamma_ms: cfg.gamma.as_millis(),
            tau_ms: cfg.tau.as_millis(),
            compression: cfg.compression,
            seed: cfg.seed,
            trips: cfg.trips.len(),
            origin_ms: cfg.origin.as_millis(),
            t_date_ms: cfg.t_date.as_millis(),
            ltca_addr: services.ltca_addr.clone(),
            pca_addr: services.pca_addr.clone(),
        },
        audit,
        records,
    })
}

/// Saturation probe: how many full acquisitions per second the deployment
/// sustains with `concurrency` vehicles requesting back to back, wall
/// clock, no compression.
pub struct ThroughputReport {
    pub attempted: u64,
    pub ok: u64,
    pub wall: Duration,
    pub per_sec: f64,
}

pub fn throughput_probe(
    n_acquisitions: usize,
    concurrency: usize,
    tau: DurMs,
    window_len: DurMs,
    seed: u64,
) -> Result<ThroughputReport> {
    use rand_core::SeedableRng as _;

    let t_date = TimeMs(TimeMs::now().as_millis() / 86_400_000 * 86_400_000);
    let params = LaunchParams {
        issuer_id: crate::config::id_string("ltca.probe")?,
        pca_id: crate::config::id_string("pca.probe")?,
        tau,
        gamma: window_len,
        t_date,
        skew: DurMs::from_secs(600),
        grace: DurMs::from_secs(600),
        credential: vpki_core::model::RaCredential([0xB1; 32]),
        state_dir: None,
        seed,
    };
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let deployment = launch::launch(&params, clock.clone())?;
    let pca_info = deployment.pca_channel.fetch_config()?;

    // provision ahead of measurement
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let policy = PolicyConfig {
        kind: PolicyKind::P2,
        gamma: window_len,
        tau_p: tau,
        t_date,
    };
    let mut contexts = Vec::with_capacity(n_acquisitions);
    for i in 0..n_acquisitions {
        let keys = generate_keypair(&mut rng);
        let subject = SubjectId::from_label(&format!("probe#{i}"));
        let ltc = deployment.ltca.register_vehicle(subject, keys.public.clone(), clock.now())?;
        let mut ctx = VehicleContext::new(
            ltc,
            keys,
            deployment.ltca.public_key().clone(),
            policy,
            pca_info.clone(),
            SharedRng::new(rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ i as u64)),
        );
        ctx.skew = DurMs::from_secs(600);
        ctx.fill_pool(window_len.div_ceil(tau) as usize);
        contexts.push(ctx);
    }

    let queue = Arc::new(std::sync::Mutex::new(contexts));
    let ok = Arc::new(AtomicU64::new(0));
    let started = Instant::now();
    std::thread::scope(|scope| {
        for _ in 0..concurrency.max(1) {
            let queue = queue.clone();
            let ok = ok.clone();
            let ltca = deployment.ltca_channel.clone();
            let pca = deployment.pca_channel.clone();
            let clock = clock.clone();
            scope.spawn(move || loop {
                let Some(mut ctx) = queue.lock().unwrap_or_else(|e| e.into_inner()).pop() else {
                    break;
                };
                let now = clock.now();
                let window = Window { start: now, end: now + window_len };
                if ctx.acquire(window, &*clock, &ltca, &pca).is_ok() {
                    ok.fetch_add(1, Ordering::Relaxed);
                }
            });
        }
    });
    let wall = started.elapsed();
    let ok = ok.load(Ordering::Relaxed);
    Ok(ThroughputReport {
        attempted: n_acquisitions as u64,
        ok,
        wall,
        per_sec: ok as f64 / wall.as_secs_f64(),
    })
}
