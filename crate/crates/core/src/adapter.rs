//! Redundancy level selection.
//!
//! Once per decision interval the sender measures the loss rate and the
//! average loss detection time, then picks the redundancy level K as the
//! minimum of three constrained levels:
//!
//! * `k_alpha`  smallest K whose predicted recovery latency F(K) fits the
//!   latency tolerance (best effort: saturates at `k_max` if unattainable),
//! * `k_beta`   largest K whose redundancy cost G(K) = K R fits the cost
//!   tolerance (hard cap),
//! * `k_gamma`  largest K whose goodput reduction H(K) fits the goodput
//!   tolerance (hard cap).
//!
//! F is monotonically non-increasing in K and G, H strictly increasing, so
//! each level is found by binary search.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::reinjection::compute_t_thres;

/// Absolute slack used when comparing a formula value against its tolerance,
/// absorbing float dust so that e.g. 6 * 0.05 <= 0.30 holds.
const CONSTRAINT_EPS: f64 = 1e-9;

/// Exponential smoothing gain applied to the per-interval loss rate and loss
/// detection time before they feed the formulas. Raw per-interval estimates
/// at short decision intervals are too noisy to keep the hard caps tight.
const MEASUREMENT_GAIN: f64 = 0.25;

/// User-facing knobs: how much recovery latency, extra traffic, and goodput
/// loss the operator is willing to tolerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Recovery latency tolerance (alpha).
    pub alpha: Duration,
    /// Redundancy cost tolerance (beta), a fraction in [0, 1].
    pub beta: f64,
    /// Goodput reduction tolerance (gamma), a fraction in [0, 1].
    pub gamma: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(format!("beta must be in [0, 1], got {}", self.beta));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        Ok(())
    }
}

/// Network measurements gathered over one completed decision interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    /// Loss detections divided by packets sent (reinjections excluded from
    /// the denominator); 0 when nothing was sent.
    pub loss_rate: f64,
    /// Mean loss detection time over first retransmissions in the interval.
    pub avg_loss_detection_time: Duration,
    pub packets_sent: u64,
    pub losses_detected: u64,
    pub interval_index: u64,
}

fn check_r(r: f64) {
    assert!(
        r > 0.0 && r < 1.0,
        "loss rate must be inside (0, 1), got {r}"
    );
}

/// Predicted mean recovery latency at redundancy level `k`:
/// F(K) = (1 + K R^K) / ((1 - R)(1 + K)) * T_unit.
pub fn f_recovery_latency(k: u32, r: f64, t_unit: Duration) -> Duration {
    check_r(r);
    let k_f = k as f64;
    let factor = (1.0 + k_f * r.powi(k as i32)) / ((1.0 - r) * (1.0 + k_f));
    Duration::from_secs_f64(factor * t_unit.as_secs_f64())
}

/// Predicted redundancy cost at level `k`: G(K) = K R.
pub fn g_redundancy_cost(k: u32, r: f64) -> f64 {
    check_r(r);
    k as f64 * r
}

/// Predicted goodput reduction at level `k`:
/// H(K) = 1 - 1 / (1 + K R - (1 + K) R^2 + R^(K + 2)).
pub fn h_goodput_reduction(k: u32, r: f64) -> f64 {
    check_r(r);
    let k_f = k as f64;
    let denom = 1.0 + k_f * r - (1.0 + k_f) * r * r + r.powi(k as i32 + 2);
    1.0 - 1.0 / denom
}

/// Smallest K in [0, k_max] with F(K) <= alpha. Latency is best-effort:
/// if even `k_max` misses the tolerance, returns `k_max`.
pub fn k_alpha(r: f64, t_unit: Duration, alpha: Duration, k_max: u32) -> u32 {
    check_r(r);
    let fits = |k: u32| {
        f_recovery_latency(k, r, t_unit).as_secs_f64() <= alpha.as_secs_f64() + CONSTRAINT_EPS
    };
    if !fits(k_max) {
        return k_max;
    }
    // F is non-increasing, so `fits` flips false -> true exactly once.
    let (mut lo, mut hi) = (0, k_max);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Largest K in [0, k_max] with G(K) <= beta; equals min(k_max, floor(beta / R)).
pub fn k_beta(r: f64, beta: f64, k_max: u32) -> u32 {
    check_r(r);
    let fits = |k: u32| g_redundancy_cost(k, r) <= beta + CONSTRAINT_EPS;
    // G(0) = 0 always fits; G is strictly increasing.
    let (mut lo, mut hi) = (0, k_max);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Largest K in [0, k_max] with H(K) <= gamma.
pub fn k_gamma(r: f64, gamma: f64, k_max: u32) -> u32 {
    check_r(r);
    let fits = |k: u32| h_goodput_reduction(k, r) <= gamma + CONSTRAINT_EPS;
    let (mut lo, mut hi) = (0, k_max);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// The per-interval redundancy level: 0 on a loss-free interval, otherwise
/// min of the three constrained levels.
pub fn decide_k_theta(stats: &IntervalStats, tolerances: &Tolerances, k_max: u32) -> u32 {
    if stats.loss_rate == 0.0 {
        return 0;
    }
    let ka = k_alpha(
        stats.loss_rate,
        stats.avg_loss_detection_time,
        tolerances.alpha,
        k_max,
    );
    let kb = k_beta(stats.loss_rate, tolerances.beta, k_max);
    let kg = k_gamma(stats.loss_rate, tolerances.gamma, k_max);
    ka.min(kb).min(kg)
}

/// Whether the level adapts per interval or stays pinned (used by the
/// formula-validation harness).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelPolicy {
    Adaptive,
    Fixed(u32),
}

/// Outcome of one decision interval, recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub stats: IntervalStats,
    pub k_alpha: u32,
    pub k_beta: u32,
    pub k_gamma: u32,
    pub k_theta: u32,
    pub t_thres: Option<Duration>,
}

/// Per-connection adapter state: accumulates interval measurements, smooths
/// them, and publishes the current redundancy level and reinjection threshold.
#[derive(Debug, Clone)]
pub struct RedundancyAdapter {
    tolerances: Tolerances,
    k_max: u32,
    policy: LevelPolicy,
    k_alpha: u32,
    k_beta: u32,
    k_gamma: u32,
    k_theta: u32,
    smoothed_loss_rate: Option<f64>,
    smoothed_t_unit: Option<Duration>,
    t_thres: Option<Duration>,
    interval_index: u64,
    sent_in_interval: u64,
    losses_in_interval: u64,
    t_unit_sum: Duration,
    t_unit_samples: u64,
}

impl RedundancyAdapter {
    pub fn new(tolerances: Tolerances, k_max: u32, policy: LevelPolicy) -> Self {
        let k_init = match policy {
            LevelPolicy::Adaptive => 0,
            LevelPolicy::Fixed(k) => {
                assert!(k <= k_max, "fixed level {k} exceeds k_max {k_max}");
                k
            }
        };
        RedundancyAdapter {
            tolerances,
            k_max,
            policy,
            k_alpha: k_init,
            k_beta: k_init,
            k_gamma: k_init,
            k_theta: k_init,
            smoothed_loss_rate: None,
            smoothed_t_unit: None,
            t_thres: None,
            interval_index: 0,
            sent_in_interval: 0,
            losses_in_interval: 0,
            t_unit_sum: Duration::ZERO,
            t_unit_samples: 0,
        }
    }

    pub fn k_theta(&self) -> u32 {
        self.k_theta
    }

    pub fn t_thres(&self) -> Option<Duration> {
        self.t_thres
    }

    /// Counts a non-reinjection wire send toward the interval loss rate.
    pub fn record_send(&mut self) {
        self.sent_in_interval += 1;
    }

    pub fn record_loss_detection(&mut self) {
        self.losses_in_interval += 1;
    }

    /// Feeds the loss detection time observed at a data unit's first
    /// retransmission.
    pub fn record_t_unit_sample(&mut self, sample: Duration) {
        self.t_unit_sum += sample;
        self.t_unit_samples += 1;
    }

    /// Closes the current decision interval: folds its measurements into the
    /// smoothed estimates and recomputes the level.
    pub fn on_interval_end(&mut self) -> Decision {
        let raw_loss_rate = if self.sent_in_interval > 0 {
            self.losses_in_interval as f64 / self.sent_in_interval as f64
        } else {
            0.0
        };
        let interval_t_unit = if self.t_unit_samples > 0 {
            Some(self.t_unit_sum / self.t_unit_samples as u32)
        } else {
            // No losses this interval: previous T_unit is retained so the
            // reinjection threshold stays defined.
            self.smoothed_t_unit
        };

        if let Some(cur) = interval_t_unit {
            let prev = self.smoothed_t_unit.unwrap_or(cur);
            let blended = prev.as_secs_f64()
                + if self.t_unit_samples > 0 {
                    MEASUREMENT_GAIN * (cur.as_secs_f64() - prev.as_secs_f64())
                } else {
                    0.0
                };
            self.smoothed_t_unit = Some(Duration::from_secs_f64(blended));
        }
        let prev_rate = self.smoothed_loss_rate.unwrap_or(raw_loss_rate);
        let rate = prev_rate + MEASUREMENT_GAIN * (raw_loss_rate - prev_rate);
        self.smoothed_loss_rate = Some(rate);

        let stats = IntervalStats {
            loss_rate: raw_loss_rate,
            avg_loss_detection_time: interval_t_unit.unwrap_or(Duration::ZERO),
            packets_sent: self.sent_in_interval,
            losses_detected: self.losses_in_interval,
            interval_index: self.interval_index,
        };

        match self.policy {
            LevelPolicy::Fixed(k) => {
                self.k_alpha = k;
                self.k_beta = k;
                self.k_gamma = k;
                self.k_theta = k;
            }
            LevelPolicy::Adaptive => {
                // A loss-free interval forces level 0 regardless of history.
                match self.smoothed_t_unit {
                    Some(t_unit) if raw_loss_rate > 0.0 && rate > 0.0 => {
                        self.k_alpha = k_alpha(rate, t_unit, self.tolerances.alpha, self.k_max);
                        self.k_beta = k_beta(rate, self.tolerances.beta, self.k_max);
                        self.k_gamma = k_gamma(rate, self.tolerances.gamma, self.k_max);
                        self.k_theta = self.k_alpha.min(self.k_beta).min(self.k_gamma);
                    }
                    _ => {
                        self.k_alpha = 0;
                        self.k_beta = 0;
                        self.k_gamma = 0;
                        self.k_theta = 0;
                    }
                }
            }
        }
        self.t_thres = self
            .smoothed_t_unit
            .map(|t| compute_t_thres(t, self.k_theta));

        self.interval_index += 1;
        self.sent_in_interval = 0;
        self.losses_in_interval = 0;
        self.t_unit_sum = Duration::ZERO;
        self.t_unit_samples = 0;

        Decision {
            stats,
            k_alpha: self.k_alpha,
            k_beta: self.k_beta,
            k_gamma: self.k_gamma,
            k_theta: self.k_theta,
            t_thres: self.t_thres,
        }
    }
}
