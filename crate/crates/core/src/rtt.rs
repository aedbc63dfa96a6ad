//! Smoothed round-trip-time estimation and the retransmission timeout.

use std::time::Duration;

/// Floor for the retransmission timeout.
pub const MIN_RTO: Duration = Duration::from_millis(200);

/// Timeout used before the first RTT sample exists.
pub const INITIAL_RTO: Duration = Duration::from_millis(500);

/// Classic exponentially weighted RTT smoothing over integer microseconds.
/// Quotients round half-up so replay is bit-stable across platforms.
#[derive(Debug, Clone, Copy, Default)]
pub struct RttEstimator {
    srtt_us: u64,
    rttvar_us: u64,
    has_sample: bool,
}

impl RttEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_sample(&self) -> bool {
        self.has_sample
    }

    pub fn srtt(&self) -> Duration {
        Duration::from_micros(self.srtt_us)
    }

    pub fn rttvar(&self) -> Duration {
        Duration::from_micros(self.rttvar_us)
    }

    /// Feeds one RTT sample. The first sample initializes srtt to the sample
    /// and rttvar to half of it; later samples apply
    /// srtt' = 7/8 srtt + 1/8 sample and rttvar' = 3/4 rttvar + 1/4 |srtt - sample|.
    ///
    /// Non-positive samples are rejected as measurement bugs.
    pub fn update(&mut self, sample: Duration) {
        let sample_us = sample.as_micros() as u64;
        assert!(sample_us > 0, "rtt sample must be positive");
        if !self.has_sample {
            self.srtt_us = sample_us;
            self.rttvar_us = sample_us / 2;
            self.has_sample = true;
            return;
        }
        let err = self.srtt_us.abs_diff(sample_us);
        self.rttvar_us = (3 * self.rttvar_us + err + 2) / 4;
        self.srtt_us = (7 * self.srtt_us + sample_us + 4) / 8;
    }

    /// Retransmission timeout: srtt + 4 * rttvar with a 200 ms floor.
    pub fn rto(&self) -> Duration {
        if !self.has_sample {
            return INITIAL_RTO;
        }
        let raw = Duration::from_micros(self.srtt_us + 4 * self.rttvar_us);
        raw.max(MIN_RTO)
    }
}
