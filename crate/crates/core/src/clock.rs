//! Simulated-time clocks.
//!
//! Trace replay runs against simulated time: trigger scheduling is
//! compressed by a factor, while latency is always measured in raw wall
//! time. Services check freshness and expiry against the same simulated
//! clock the clients use.

use std::sync::Mutex;
use std::time::Instant;

use crate::time::{DurMs, TimeMs};

pub trait Clock: Send + Sync {
    /// Current simulated time.
    fn now(&self) -> TimeMs;
    /// Block until the simulated clock reaches `t` (no-op if already past).
    fn wait_until(&self, t: TimeMs);
}

/// Real time: simulated time == wall time.
#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> TimeMs {
        TimeMs::now()
    }

    fn wait_until(&self, t: TimeMs) {
        let now = self.now();
        if t > now {
            std::thread::sleep(std::time::Duration::from_millis((t - now).as_millis()));
        }
    }
}

/// Compressed simulated time anchored to a wall instant:
/// `sim_now = origin + wall_elapsed * factor`.
#[derive(Debug)]
pub struct SimClock {
    origin: TimeMs,
    anchor: Instant,
    factor: f64,
}

impl SimClock {
    /// Start a simulated clock at `origin`, anchored to the current wall
    /// instant, advancing `factor` times faster than wall time.
    pub fn start_at(origin: TimeMs, factor: f64) -> Self {
        assert!(factor > 0.0, "compression factor must be positive");
        SimClock { origin, anchor: Instant::now(), factor }
    }

    /// Reconstruct a clock anchored `anchor_wall_ms` (Unix wall ms) so that
    /// separately launched processes agree on simulated time.
    pub fn anchored(origin: TimeMs, factor: f64, anchor_wall_ms: TimeMs) -> Self {
        assert!(factor > 0.0, "compression factor must be positive");
        let wall_now = TimeMs::now();
        let anchor = if wall_now >= anchor_wall_ms {
            Instant::now() - std::time::Duration::from_millis((wall_now - anchor_wall_ms).as_millis())
        } else {
            Instant::now() + std::time::Duration::from_millis((anchor_wall_ms - wall_now).as_millis())
        };
        SimClock { origin, anchor, factor }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// Wall duration corresponding to a simulated duration.
    pub fn to_wall(&self, sim: DurMs) -> std::time::Duration {
        std::time::Duration::from_secs_f64(sim.as_secs_f64() / self.factor)
    }
}

impl Clock for SimClock {
    fn now(&self) -> TimeMs {
        let elapsed = self.anchor.elapsed().as_secs_f64();
        self.origin + DurMs((elapsed * self.factor * 1000.0) as u64)
    }

    fn wait_until(&self, t: TimeMs) {
        let now = self.now();
        if t > now {
            std::thread::sleep(self.to_wall(t - now));
        }
    }
}

/// Test clock: `wait_until` advances instantly; `advance` moves time by
/// hand.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now: Mutex<TimeMs>,
}

impl VirtualClock {
    pub fn starting_at(t: TimeMs) -> Self {
        VirtualClock { now: Mutex::new(t) }
    }

    pub fn set(&self, t: TimeMs) {
        *self.now.lock().unwrap_or_else(|e| e.into_inner()) = t;
    }

    pub fn advance(&self, d: DurMs) {
        let mut now = self.now.lock().unwrap_or_else(|e| e.into_inner());
        *now = *now + d;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> TimeMs {
        *self.now.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn wait_until(&self, t: TimeMs) {
        let mut now = self.now.lock().unwrap_or_else(|e| e.into_inner());
        if t > *now {
            *now = t;
        }
    }
}
