//! Pseudonym acquisition policies: request windows, per-trip schedules, and
//! lifetime slicing.
//!
//! Three policies govern when a vehicle contacts the VPKI and for which
//! interval it requests pseudonyms:
//!
//! - **P1 (user-controlled)**: one request at departure covering the whole
//!   (estimated) trip.
//! - **P2 (oblivious)**: a request every `gamma` seconds, each covering the
//!   next `gamma` interval, until the trip ends.
//! - **P3 (universally fixed)**: requests follow a global grid of `gamma`
//!   cells anchored at `t_date`; every vehicle's request windows and
//!   pseudonym lifetimes land on the same global boundaries, so timing
//!   information does not distinguish vehicles.

use thiserror::Error;

use crate::time::{DurMs, TimeMs, Window};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("gamma must be positive for P2/P3")]
    NonPositiveGamma,
    #[error("pseudonym lifetime must be positive")]
    NonPositiveTau,
    #[error("P3 requires tau_p to divide gamma")]
    TauNotDivisorOfGamma,
    #[error("instant lies outside the trip")]
    OutsideTrip,
    #[error("instant predates the P3 day anchor")]
    BeforeAnchor,
    #[error("every slice in the window is already expired")]
    NoUsefulSlices,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, Hash)]
pub enum PolicyKind {
    P1,
    P2,
    P3,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::P1 => "p1",
            PolicyKind::P2 => "p2",
            PolicyKind::P3 => "p3",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(PolicyKind::P1),
            "p2" => Ok(PolicyKind::P2),
            "p3" => Ok(PolicyKind::P3),
            other => Err(format!("unknown policy {other:?} (expected p1|p2|p3)")),
        }
    }
}

/// Policy parameters. `gamma` is the refill interval (P2) or global grid
/// cell length (P3), unused for P1. `tau_p` is the pseudonym lifetime.
/// `t_date` anchors the P3 grid (midnight of the service day).
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub gamma: DurMs,
    pub tau_p: DurMs,
    pub t_date: TimeMs,
}

impl PolicyConfig {
    pub fn new(
        kind: PolicyKind,
        gamma: DurMs,
        tau_p: DurMs,
        t_date: TimeMs,
    ) -> Result<Self, PolicyError> {
        let cfg = PolicyConfig { kind, gamma, tau_p, t_date };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.tau_p.is_zero() {
            return Err(PolicyError::NonPositiveTau);
        }
        match self.kind {
            PolicyKind::P1 => {}
            PolicyKind::P2 | PolicyKind::P3 => {
                if self.gamma.is_zero() {
                    return Err(PolicyError::NonPositiveGamma);
                }
            }
        }
        if self.kind == PolicyKind::P3 && self.gamma.as_millis() % self.tau_p.as_millis() != 0 {
            return Err(PolicyError::TauNotDivisorOfGamma);
        }
        Ok(())
    }
}

/// One trip extracted from a mobility trace: departure instant and duration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TripRecord {
    pub vehicle_id: String,
    pub depart: TimeMs,
    pub duration: DurMs,
}

impl TripRecord {
    pub fn interval(&self) -> Window {
        Window { start: self.depart, end: self.depart + self.duration }
    }
}

/// One planned VPKI interaction: when the vehicle triggers the request and
/// which interval the request covers.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct ScheduleEntry {
    pub trigger: TimeMs,
    pub window: Window,
}

/// The per-trip sequence of planned interactions. Windows jointly cover the
/// trip; triggers are strictly increasing; every trigger except the first
/// (which fires at departure) coincides with its window start.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AcquisitionSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl AcquisitionSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Index of the P3 grid cell containing `t`.
fn grid_index(cfg: &PolicyConfig, t: TimeMs) -> Result<u64, PolicyError> {
    if t < cfg.t_date {
        return Err(PolicyError::BeforeAnchor);
    }
    Ok((t - cfg.t_date).as_millis() / cfg.gamma.as_millis())
}

/// The P3 grid cell with the given index.
fn grid_cell(cfg: &PolicyConfig, index: u64) -> Window {
    let start = cfg.t_date + cfg.gamma * index;
    Window { start, end: start + cfg.gamma }
}

/// The interval a ticket/pseudonym request covers when triggered at `now`.
pub fn request_window(
    cfg: &PolicyConfig,
    now: TimeMs,
    trip: &TripRecord,
) -> Result<Window, PolicyError> {
    if !trip.interval().contains(now) {
        return Err(PolicyError::OutsideTrip);
    }
    match cfg.kind {
        PolicyKind::P1 => Ok(trip.interval()),
        PolicyKind::P2 => Ok(Window { start: now, end: now + cfg.gamma }),
        PolicyKind::P3 => Ok(grid_cell(cfg, grid_index(cfg, now)?)),
    }
}

/// How many VPKI interactions the trip requires under `cfg`: 1 for P1,
/// ceil(duration/gamma) for P2, and the number of grid cells the trip
/// intersects for P3.
pub fn interactions_count(cfg: &PolicyConfig, trip: &TripRecord) -> Result<u64, PolicyError> {
    match cfg.kind {
        PolicyKind::P1 => Ok(1),
        PolicyKind::P2 => Ok(trip.duration.div_ceil(cfg.gamma)),
        PolicyKind::P3 => {
            let first = grid_index(cfg, trip.depart)?;
            // Half-open trip interval: the cell containing the last covered
            // millisecond, not the end boundary itself.
            let last = grid_index(cfg, trip.depart + trip.duration - DurMs(1))?;
            Ok(last - first + 1)
        }
    }
}

/// Plan the trip's interactions. The first trigger fires at departure;
/// subsequent triggers fire at their window starts (P2: every `gamma` from
/// departure; P3: at grid boundaries).
pub fn compute_schedule(
    cfg: &PolicyConfig,
    trip: &TripRecord,
) -> Result<AcquisitionSchedule, PolicyError> {
    cfg.validate()?;
    if trip.duration.is_zero() {
        return Err(PolicyError::OutsideTrip);
    }
    let trip_end = trip.depart + trip.duration;
    let mut entries = Vec::new();
    match cfg.kind {
        PolicyKind::P1 => {
            entries.push(ScheduleEntry { trigger: trip.depart, window: trip.interval() });
        }
        PolicyKind::P2 => {
            let n = trip.duration.div_ceil(cfg.gamma);
            for k in 0..n {
                let start = trip.depart + cfg.gamma * k;
                entries.push(ScheduleEntry {
                    trigger: start,
                    window: Window { start, end: start + cfg.gamma },
                });
            }
        }
        PolicyKind::P3 => {
            let first = grid_index(cfg, trip.depart)?;
            let last = grid_index(cfg, trip_end - DurMs(1))?;
            for index in first..=last {
                let window = grid_cell(cfg, index);
                let trigger = if index == first { trip.depart } else { window.start };
                entries.push(ScheduleEntry { trigger, window });
            }
        }
    }
    Ok(AcquisitionSchedule { entries })
}

/// Slice a request window into pseudonym lifetimes of length `tau_p`.
///
/// P1/P2: slices start at the window start; the final slice is truncated at
/// the window end. P3: slices lie on the global `tau_p` grid anchored at
/// `t_date`, and slices that already ended by `now` are dropped (a vehicle
/// joining mid-cell only obtains the non-expired ones).
pub fn slice_lifetimes(
    cfg: &PolicyConfig,
    window: Window,
    now: TimeMs,
) -> Result<Vec<Window>, PolicyError> {
    if window.start >= window.end {
        return Err(PolicyError::OutsideTrip);
    }
    let tau = cfg.tau_p;
    let mut slices = Vec::new();
    match cfg.kind {
        PolicyKind::P1 | PolicyKind::P2 => {
            let mut start = window.start;
            while start < window.end {
                let end = (start + tau).min(window.end);
                slices.push(Window { start, end });
                start = end;
            }
        }
        PolicyKind::P3 => {
            // Grid-cell windows start on a tau boundary because tau divides
            // gamma and cells are anchored at t_date.
            let mut start = window.start;
            while start < window.end {
                let end = start + tau;
                if end > now {
                    slices.push(Window { start, end });
                }
                start = end;
            }
            if slices.is_empty() {
                return Err(PolicyError::NoUsefulSlices);
            }
        }
    }
    Ok(slices)
}

/// True when `window` is exactly one cell of the P3 grid `(t_date, gamma)`.
/// The PCA uses this to decide between grid slicing (drop expired slices)
/// and plain slicing from the window start.
pub fn is_grid_cell(window: Window, t_date: TimeMs, gamma: DurMs) -> bool {
    window.start >= t_date
        && (window.start - t_date).as_millis() % gamma.as_millis() == 0
        && window.end == window.start + gamma
}

/// The PCA's authoritative slicing rule, shared verbatim by clients so both
/// sides derive the same key count from the same request fields.
///
/// Grid-cell windows get P3 semantics (global alignment, expired slices
/// dropped relative to `at`, the request timestamp); anything else is sliced
/// from its start with a truncated tail. Using the request timestamp rather
/// than each side's own clock keeps the count deterministic under transit
/// delay; the freshness check bounds how far `at` can drift.
pub fn pca_slices(
    window: Window,
    at: TimeMs,
    tau_p: DurMs,
    gamma_p3: DurMs,
    t_date: TimeMs,
) -> Result<Vec<Window>, PolicyError> {
    let kind = if is_grid_cell(window, t_date, gamma_p3) {
        PolicyKind::P3
    } else {
        PolicyKind::P2
    };
    let cfg = PolicyConfig { kind, gamma: gamma_p3, tau_p, t_date };
    cfg.validate()?;
    slice_lifetimes(&cfg, window, at)
}
