//! Simulated clock. All timestamps are integer microseconds since the start
//! of a run, so identical inputs replay to identical traces on any platform.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// A point in simulated time, in microseconds since connection open.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Elapsed time since `earlier`, clamped at zero.
    pub fn saturating_since(self, earlier: SimTime) -> Duration {
        Duration::from_micros(self.0.saturating_sub(earlier.0))
    }
}

impl Add<Duration> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: Duration) -> SimTime {
        SimTime(self.0 + rhs.as_micros() as u64)
    }
}

impl AddAssign<Duration> for SimTime {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.as_micros() as u64;
    }
}

impl Sub<SimTime> for SimTime {
    type Output = Duration;

    fn sub(self, rhs: SimTime) -> Duration {
        debug_assert!(self.0 >= rhs.0, "time went backwards");
        Duration::from_micros(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Converts a quantity of bits at a rate in bits/s to a duration, rounding
/// half-up to whole microseconds. Rounding happens only here, at the final
/// conversion, so repeated conversions cannot accumulate drift.
pub fn transmission_delay(bits: u64, bits_per_sec: u64) -> Duration {
    assert!(bits_per_sec > 0, "rate must be positive");
    let us = (bits as u128 * 1_000_000 + bits_per_sec as u128 / 2) / bits_per_sec as u128;
    Duration::from_micros(us as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_round_trips() {
        let t = SimTime::from_millis(5);
        let u = t + Duration::from_micros(250);
        assert_eq!(u.as_micros(), 5_250);
        assert_eq!(u - t, Duration::from_micros(250));
    }

    #[test]
    fn transmission_delay_rounds_half_up() {
        // 1300 bytes at 12 Mbps: 10400 bits / 12e6 = 866.67 us.
        assert_eq!(
            transmission_delay(1300 * 8, 12_000_000),
            Duration::from_micros(867)
        );
        // 300 bytes at 12 Mbps: 2400 / 12e6 = exactly 200 us.
        assert_eq!(
            transmission_delay(300 * 8, 12_000_000),
            Duration::from_micros(200)
        );
    }

    #[test]
    fn saturating_since_clamps() {
        let a = SimTime::from_micros(10);
        let b = SimTime::from_micros(30);
        assert_eq!(b.saturating_since(a), Duration::from_micros(20));
        assert_eq!(a.saturating_since(b), Duration::ZERO);
    }
}
