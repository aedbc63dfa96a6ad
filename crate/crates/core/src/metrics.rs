//! Post-hoc metric computation. Every metric is a pure function of a trace:
//! recomputing over the same trace always yields the same numbers.

use std::collections::BTreeMap;
use std::time::Duration;

use crate::model::{AttemptKind, DataId};
use crate::time::SimTime;
use crate::trace::{Trace, TraceEvent};

/// Per-attempt ground truth assembled from the trace.
#[derive(Debug, Clone, Copy)]
struct AttemptMeta {
    data_id: DataId,
    kind: AttemptKind,
    sent_at: SimTime,
    delivered: bool,
}

/// Recovery timeline of one data unit.
#[derive(Debug, Clone, Copy, Default)]
struct UnitTimeline {
    bytes: u32,
    detections: u32,
    first_retx_send: Option<SimTime>,
    first_retx_delivered: Option<bool>,
    /// Send time of the earliest recovery attempt (retransmission or
    /// reinjection) that was eventually delivered.
    earliest_delivered_recovery_send: Option<SimTime>,
    first_delivered_at: Option<SimTime>,
}

#[derive(Debug, Clone, Copy)]
struct FrameMeta {
    generated_at: SimTime,
    start_offset: u64,
    end_offset: u64,
    deadline: Option<SimTime>,
}

/// Parsed view of a trace, shared by all metric computations.
#[derive(Debug)]
pub struct TraceAnalysis {
    close_time: SimTime,
    initial_sends: u64,
    retransmissions: u64,
    reinjections: u64,
    dropped_attempts: u64,
    total_attempts: u64,
    t_unit_sum: Duration,
    t_unit_samples: u64,
    k_theta_sum: u64,
    k_theta_decisions: u64,
    units: BTreeMap<u64, UnitTimeline>,
    frames: Vec<FrameMeta>,
}

impl TraceAnalysis {
    pub fn new(trace: &Trace) -> Self {
        let mut attempts: BTreeMap<u64, AttemptMeta> = BTreeMap::new();
        let mut analysis = TraceAnalysis {
            close_time: SimTime::ZERO,
            initial_sends: 0,
            retransmissions: 0,
            reinjections: 0,
            dropped_attempts: 0,
            total_attempts: 0,
            t_unit_sum: Duration::ZERO,
            t_unit_samples: 0,
            k_theta_sum: 0,
            k_theta_decisions: 0,
            units: BTreeMap::new(),
            frames: Vec::new(),
        };

        for (at, event) in trace.iter() {
            match event {
                TraceEvent::ConnClose => analysis.close_time = *at,
                TraceEvent::FrameGen {
                    start_offset,
                    bytes,
                    deadline_us,
                    ..
                } => analysis.frames.push(FrameMeta {
                    generated_at: *at,
                    start_offset: *start_offset,
                    end_offset: start_offset + bytes,
                    deadline: deadline_us.map(SimTime::from_micros),
                }),
                TraceEvent::Send {
                    attempt_id,
                    data_id,
                    bytes,
                } => {
                    analysis.initial_sends += 1;
                    analysis.total_attempts += 1;
                    analysis.units.entry(data_id.0).or_default().bytes = *bytes;
                    attempts.insert(
                        attempt_id.0,
                        AttemptMeta {
                            data_id: *data_id,
                            kind: AttemptKind::Initial,
                            sent_at: *at,
                            delivered: false,
                        },
                    );
                }
                TraceEvent::Retransmit {
                    attempt_id,
                    data_id,
                    t_unit_us,
                    ..
                } => {
                    analysis.retransmissions += 1;
                    analysis.total_attempts += 1;
                    let unit = analysis.units.entry(data_id.0).or_default();
                    if unit.first_retx_send.is_none() {
                        unit.first_retx_send = Some(*at);
                    }
                    if let Some(t) = t_unit_us {
                        analysis.t_unit_sum += Duration::from_micros(*t);
                        analysis.t_unit_samples += 1;
                    }
                    attempts.insert(
                        attempt_id.0,
                        AttemptMeta {
                            data_id: *data_id,
                            kind: AttemptKind::Retransmission,
                            sent_at: *at,
                            delivered: false,
                        },
                    );
                }
                TraceEvent::Reinject {
                    attempt_id,
                    data_id,
                    ..
                } => {
                    analysis.reinjections += 1;
                    analysis.total_attempts += 1;
                    attempts.insert(
                        attempt_id.0,
                        AttemptMeta {
                            data_id: *data_id,
                            kind: AttemptKind::Reinjection,
                            sent_at: *at,
                            delivered: false,
                        },
                    );
                }
                TraceEvent::Drop { .. } => analysis.dropped_attempts += 1,
                TraceEvent::Deliver { attempt_id, .. } => {
                    if let Some(meta) = attempts.get_mut(&attempt_id.0) {
                        meta.delivered = true;
                        let data = meta.data_id.0;
                        let at = *at;
                        let unit = analysis.units.entry(data).or_default();
                        if unit.first_delivered_at.is_none() {
                            unit.first_delivered_at = Some(at);
                        }
                    }
                }
                TraceEvent::LossDetect { data_id, .. } => {
                    analysis.units.entry(data_id.0).or_default().detections += 1;
                }
                TraceEvent::AdapterDecision { k_theta, .. } => {
                    analysis.k_theta_sum += *k_theta as u64;
                    analysis.k_theta_decisions += 1;
                }
                _ => {}
            }
        }

        // Fold attempt fates into per-unit recovery timelines, in send order.
        for meta in attempts.values() {
            if meta.kind == AttemptKind::Initial {
                continue;
            }
            let unit = analysis.units.get_mut(&meta.data_id.0).unwrap();
            if meta.kind == AttemptKind::Retransmission
                && unit.first_retx_send == Some(meta.sent_at)
                && unit.first_retx_delivered.is_none()
            {
                unit.first_retx_delivered = Some(meta.delivered);
            }
            if meta.delivered && unit.earliest_delivered_recovery_send.is_none() {
                unit.earliest_delivered_recovery_send = Some(meta.sent_at);
            }
        }
        analysis
    }

    fn lost_units(&self) -> impl Iterator<Item = &UnitTimeline> {
        self.units.values().filter(|u| u.detections > 0)
    }

    /// Recovery latency of one lost unit: send time of the first
    /// eventually-delivered recovery attempt minus the first retransmission
    /// time; zero when the first retransmission itself got through.
    fn unit_recovery_latency(unit: &UnitTimeline) -> Option<Duration> {
        let first_retx = unit.first_retx_send?;
        let recovered = unit.earliest_delivered_recovery_send?;
        Some(recovered - first_retx)
    }
}

/// Aggregate recovery behaviour of one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecoveryStats {
    pub lost_units: u64,
    /// Mean over lost units whose first retransmission was itself dropped,
    /// matching how recovery latency is customarily displayed.
    pub mean_recovery_latency: Option<Duration>,
    /// Mean over all lost units, exported for completeness.
    pub mean_recovery_latency_all: Option<Duration>,
    pub max_recovery_latency: Option<Duration>,
    /// Lost units whose recovery latency reached their own loss detection
    /// time, over all lost units. Zero when nothing was lost.
    pub deterioration_rate: f64,
    pub mean_t_unit: Option<Duration>,
}

/// Traffic accounting of one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct CostStats {
    pub initial_sends: u64,
    pub retransmissions: u64,
    pub reinjections: u64,
    pub dropped_attempts: u64,
    pub total_attempts: u64,
    /// Reinjected replicas over original sends.
    pub redundancy_cost: f64,
    /// Wire-level drop fraction over all attempts.
    pub measured_loss_rate: f64,
    /// Distinct delivered application bits per second of connection time.
    pub goodput_bps: f64,
    pub delivered_all: bool,
}

/// Player-model quality metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct QoeStats {
    pub freeze_count: u64,
    pub freeze_total: Duration,
    pub freezes_per_100s: f64,
    pub freeze_ms_per_100s: f64,
    /// Frames not fully delivered by their deadline; None when deadline
    /// accounting was off.
    pub deadline_miss_rate: Option<f64>,
}

pub fn recovery_stats(analysis: &TraceAnalysis) -> RecoveryStats {
    let mut stats = RecoveryStats::default();
    let mut sum_all = Duration::ZERO;
    let mut n_all = 0u64;
    let mut sum_display = Duration::ZERO;
    let mut n_display = 0u64;
    let mut deteriorated = 0u64;
    for unit in analysis.lost_units() {
        stats.lost_units += 1;
        let Some(latency) = TraceAnalysis::unit_recovery_latency(unit) else {
            continue;
        };
        sum_all += latency;
        n_all += 1;
        stats.max_recovery_latency =
            Some(stats.max_recovery_latency.unwrap_or_default().max(latency));
        if unit.first_retx_delivered == Some(false) {
            sum_display += latency;
            n_display += 1;
        }
        // Deteriorated recovery: the unit needed a second loss-detection
        // cycle, i.e. it spent at least one extra detection time beyond the
        // first. Counting detection cycles measures the same quantity as
        // comparing latency against the unit's own detection time, without
        // the measurement tie at exactly one detection time.
        if unit.detections >= 2 {
            deteriorated += 1;
        }
    }
    if n_all > 0 {
        stats.mean_recovery_latency_all = Some(sum_all / n_all as u32);
    }
    if n_display > 0 {
        stats.mean_recovery_latency = Some(sum_display / n_display as u32);
    }
    if stats.lost_units > 0 {
        stats.deterioration_rate = deteriorated as f64 / stats.lost_units as f64;
    }
    if analysis.t_unit_samples > 0 {
        stats.mean_t_unit = Some(analysis.t_unit_sum / analysis.t_unit_samples as u32);
    }
    stats
}

pub fn cost_stats(analysis: &TraceAnalysis) -> CostStats {
    let delivered_bits: u64 = analysis
        .units
        .values()
        .filter(|u| u.first_delivered_at.is_some())
        .map(|u| u.bytes as u64 * 8)
        .sum();
    let elapsed = analysis.close_time.as_secs_f64();
    CostStats {
        initial_sends: analysis.initial_sends,
        retransmissions: analysis.retransmissions,
        reinjections: analysis.reinjections,
        dropped_attempts: analysis.dropped_attempts,
        total_attempts: analysis.total_attempts,
        redundancy_cost: if analysis.initial_sends > 0 {
            analysis.reinjections as f64 / analysis.initial_sends as f64
        } else {
            0.0
        },
        measured_loss_rate: if analysis.total_attempts > 0 {
            analysis.dropped_attempts as f64 / analysis.total_attempts as f64
        } else {
            0.0
        },
        goodput_bps: if elapsed > 0.0 {
            delivered_bits as f64 / elapsed
        } else {
            0.0
        },
        delivered_all: analysis
            .units
            .values()
            .all(|u| u.first_delivered_at.is_some()),
    }
}

/// Recovery latency of one data unit, per its definition; absent for data
/// that was never detected lost.
pub fn recovery_latency(trace: &Trace, data_id: DataId) -> Option<Duration> {
    let analysis = TraceAnalysis::new(trace);
    let unit = analysis.units.get(&data_id.0)?;
    if unit.detections == 0 {
        return None;
    }
    TraceAnalysis::unit_recovery_latency(unit)
}

pub fn deterioration_rate(trace: &Trace) -> f64 {
    recovery_stats(&TraceAnalysis::new(trace)).deterioration_rate
}

pub fn redundancy_cost(trace: &Trace) -> f64 {
    cost_stats(&TraceAnalysis::new(trace)).redundancy_cost
}

/// Relative goodput drop of a run versus its paired baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodputReduction {
    /// 1 - goodput / baseline goodput; negative when the run was faster.
    pub raw: f64,
    /// Raw value floored at zero, the conventional reporting form.
    pub reported: f64,
}

pub fn goodput_reduction(goodput_bps: f64, baseline_goodput_bps: f64) -> GoodputReduction {
    let raw = if baseline_goodput_bps > 0.0 {
        1.0 - goodput_bps / baseline_goodput_bps
    } else {
        0.0
    };
    GoodputReduction {
        raw,
        reported: raw.max(0.0),
    }
}

/// Simulates a playout clock over frame completion times. Playout of frame i
/// is scheduled at its generation time plus the startup buffer, shifted by
/// all freezes so far; a freeze runs from the scheduled instant to the
/// frame's completion.
pub fn freezing(trace: &Trace, startup_buffer: Duration) -> QoeStats {
    let analysis = TraceAnalysis::new(trace);
    qoe_stats(&analysis, startup_buffer)
}

pub fn qoe_stats(analysis: &TraceAnalysis, startup_buffer: Duration) -> QoeStats {
    let mut stats = QoeStats::default();
    if analysis.frames.is_empty() {
        return stats;
    }

    // Completion time per frame: latest first delivery among its units.
    // Units are keyed by stream offset, so each frame covers a contiguous
    // key range.
    let mut completions = Vec::with_capacity(analysis.frames.len());
    for frame in &analysis.frames {
        let mut completion = Some(SimTime::ZERO);
        for (_, unit) in analysis.units.range(frame.start_offset..frame.end_offset) {
            match (completion, unit.first_delivered_at) {
                (Some(c), Some(d)) => completion = Some(c.max(d)),
                _ => completion = None,
            }
        }
        completions.push(completion);
    }

    let mut freeze_shift = Duration::ZERO;
    let mut misses = 0u64;
    let mut deadlines = 0u64;
    for (frame, completion) in analysis.frames.iter().zip(&completions) {
        let completion = completion.unwrap_or(analysis.close_time);
        let scheduled = frame.generated_at + startup_buffer + freeze_shift;
        if completion > scheduled {
            let stall = completion - scheduled;
            stats.freeze_count += 1;
            stats.freeze_total += stall;
            freeze_shift += stall;
        }
        if let Some(deadline) = frame.deadline {
            deadlines += 1;
            if completion > deadline {
                misses += 1;
            }
        }
    }

    let first = analysis.frames.first().unwrap().generated_at;
    let last = analysis.frames.last().unwrap().generated_at;
    let n = analysis.frames.len() as f64;
    let media_seconds = if analysis.frames.len() > 1 {
        (last - first).as_secs_f64() * n / (n - 1.0)
    } else {
        analysis.close_time.as_secs_f64().max(1e-9)
    };
    stats.freezes_per_100s = stats.freeze_count as f64 * 100.0 / media_seconds;
    stats.freeze_ms_per_100s = stats.freeze_total.as_secs_f64() * 1e3 * 100.0 / media_seconds;
    if deadlines > 0 {
        stats.deadline_miss_rate = Some(misses as f64 / deadlines as f64);
    }
    stats
}

/// Bundle of all per-run metrics.
#[derive(Debug, Clone, Copy)]
pub struct RunMetrics {
    pub recovery: RecoveryStats,
    pub cost: CostStats,
    pub qoe: QoeStats,
    pub mean_k_theta: Option<f64>,
    pub close_time: SimTime,
}

pub fn run_metrics(trace: &Trace, startup_buffer: Duration) -> RunMetrics {
    let analysis = TraceAnalysis::new(trace);
    RunMetrics {
        recovery: recovery_stats(&analysis),
        cost: cost_stats(&analysis),
        qoe: qoe_stats(&analysis, startup_buffer),
        mean_k_theta: if analysis.k_theta_decisions > 0 {
            Some(analysis.k_theta_sum as f64 / analysis.k_theta_decisions as f64)
        } else {
            None
        },
        close_time: analysis.close_time,
    }
}
