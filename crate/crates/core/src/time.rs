//! Millisecond-resolution time values shared by every protocol layer.
//!
//! All wire timestamps are milliseconds since the Unix epoch; all windows
//! are half-open `[start, end)`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

/// An absolute instant, milliseconds since the Unix epoch.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeMs(pub u64);

/// A span of time in milliseconds.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DurMs(pub u64);

impl TimeMs {
    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn from_secs(secs: u64) -> Self {
        TimeMs(secs * 1000)
    }

    /// Absolute distance to another instant.
    pub fn abs_diff(self, other: TimeMs) -> DurMs {
        DurMs(self.0.abs_diff(other.0))
    }

    /// Duration since `earlier`, saturating to zero if `earlier` is later.
    pub fn saturating_since(self, earlier: TimeMs) -> DurMs {
        DurMs(self.0.saturating_sub(earlier.0))
    }

    /// Current wall-clock time.
    pub fn now() -> Self {
        let since_epoch = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .expect("system clock before Unix epoch");
        TimeMs(since_epoch.as_millis() as u64)
    }
}

impl DurMs {
    pub const ZERO: DurMs = DurMs(0);

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn from_secs(secs: u64) -> Self {
        DurMs(secs * 1000)
    }

    /// Rounds to the nearest millisecond; negative values clamp to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        DurMs((secs * 1000.0).round().max(0.0) as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `ceil(self / unit)`.
    pub fn div_ceil(self, unit: DurMs) -> u64 {
        self.0.div_ceil(unit.0)
    }
}

impl Add<DurMs> for TimeMs {
    type Output = TimeMs;
    fn add(self, rhs: DurMs) -> TimeMs {
        TimeMs(self.0 + rhs.0)
    }
}

impl AddAssign<DurMs> for TimeMs {
    fn add_assign(&mut self, rhs: DurMs) {
        self.0 += rhs.0;
    }
}

impl Sub<DurMs> for TimeMs {
    type Output = TimeMs;
    fn sub(self, rhs: DurMs) -> TimeMs {
        TimeMs(self.0 - rhs.0)
    }
}

impl Sub<TimeMs> for TimeMs {
    type Output = DurMs;
    fn sub(self, rhs: TimeMs) -> DurMs {
        DurMs(self.0 - rhs.0)
    }
}

impl Add for DurMs {
    type Output = DurMs;
    fn add(self, rhs: DurMs) -> DurMs {
        DurMs(self.0 + rhs.0)
    }
}

impl Sub for DurMs {
    type Output = DurMs;
    fn sub(self, rhs: DurMs) -> DurMs {
        DurMs(self.0 - rhs.0)
    }
}

impl Mul<u64> for DurMs {
    type Output = DurMs;
    fn mul(self, rhs: u64) -> DurMs {
        DurMs(self.0 * rhs)
    }
}

impl fmt::Debug for TimeMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t+{}ms", self.0)
    }
}

impl fmt::Debug for DurMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

/// Half-open time interval `[start, end)`.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: TimeMs,
    pub end: TimeMs,
}

impl Window {
    /// `start < end` is the invariant everywhere a window is accepted.
    pub fn new(start: TimeMs, end: TimeMs) -> Self {
        debug_assert!(start < end, "empty or inverted window");
        Window { start, end }
    }

    pub fn len(&self) -> DurMs {
        self.end - self.start
    }

    pub fn contains(&self, t: TimeMs) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// True when `other` starts exactly where `self` ends.
    pub fn abuts(&self, other: &Window) -> bool {
        self.end == other.start
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start.0, self.end.0)
    }
}
