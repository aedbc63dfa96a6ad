//! Deterministic discrete-event simulation of one live-stream connection:
//! frame generator, paced sender, lossy FIFO link, and an immediately-acking
//! receiver. A (config, seed) pair fully determines the trace.
//!
//! The sender fills each send slot by priority: pending ARQ retransmissions
//! first, then due opportunistic replicas, then fresh application data, and
//! finally off-mode reinjection drain when no fresh data exists.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::adapter::{LevelPolicy, RedundancyAdapter};
use crate::arq::{AckRecord, ArqSender, Detection};
use crate::config::{ExperimentConfig, Mechanism};
use crate::loss::LossProcess;
use crate::model::{
    classify_mode, segment_frame, AttemptId, AttemptKind, DataUnit, FrameId, SenderMode,
};
use crate::reinjection::{ReinjectTrigger, ReinjectionQueue};
use crate::time::{transmission_delay, SimTime};
use crate::trace::{Trace, TraceEvent};

/// RNG stream carrying loss draws. Stream 1 is reserved for future delay
/// jitter so adding it cannot disturb loss sequences.
const LOSS_RNG_STREAM: u64 = 0;

/// Safety valve against configurations that cannot drain (e.g. loss rate 1).
const MAX_EVENTS: u64 = 200_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("run exceeded {0} events without completing")]
    Runaway(u64),
}

/// Runs one simulation to completion: all generated data delivered and acked.
pub fn run(config: &ExperimentConfig) -> Result<Trace, SimError> {
    run_seeded(config, config.seed)
}

/// Like [`run`], but with the seed overridden (used for replications).
pub fn run_seeded(config: &ExperimentConfig, seed: u64) -> Result<Trace, SimError> {
    config.validate().map_err(SimError::InvalidConfig)?;
    Simulation::new(config, seed).run_to_completion()
}

#[derive(Debug, Clone)]
enum Event {
    FrameTick {
        index: u64,
    },
    LinkFree,
    PacketArrive {
        attempt_id: AttemptId,
        unit: DataUnit,
    },
    AckArrive {
        ack: AckRecord,
    },
    RtoExpire {
        attempt_id: AttemptId,
    },
    AdapterTick,
    ReinjectDue,
}

struct Scheduled {
    at: SimTime,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

/// Receiver side: acks every delivery immediately and tracks the highest
/// contiguous stream offset for the ack record.
#[derive(Debug, Default)]
struct Receiver {
    frontier: u64,
    out_of_order: BTreeMap<u64, u32>,
}

impl Receiver {
    fn on_deliver(&mut self, offset: u64, len: u32) -> u64 {
        if offset >= self.frontier {
            self.out_of_order.entry(offset).or_insert(len);
            while let Some(l) = self.out_of_order.remove(&self.frontier) {
                self.frontier += l as u64;
            }
        }
        self.frontier
    }
}

enum Job {
    Retransmit(DataUnit),
    Reinject {
        unit: DataUnit,
        trigger: ReinjectTrigger,
        count: u32,
    },
    NewData(DataUnit),
}

struct Simulation {
    bandwidth_bps: u64,
    one_way_delay: Duration,
    frame_bytes: u64,
    frame_rate: u32,
    total_frames: u64,
    deadline: Option<Duration>,
    decision_interval_rtts: u32,
    mechanism: Mechanism,

    now: SimTime,
    seq: u64,
    heap: BinaryHeap<Reverse<Scheduled>>,
    events_processed: u64,

    arq: ArqSender,
    reinjection: ReinjectionQueue,
    adapter: RedundancyAdapter,
    loss: LossProcess,
    receiver: Receiver,

    mode: SenderMode,
    link_free_at: SimTime,
    frames_generated: u64,
    next_offset: u64,
    adapter_started: bool,
    reinject_due_at: Option<SimTime>,

    trace: Trace,
}

impl Simulation {
    fn new(config: &ExperimentConfig, seed: u64) -> Self {
        let policy = match config.mechanism {
            Mechanism::FixedK(k) => LevelPolicy::Fixed(k),
            _ => LevelPolicy::Adaptive,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(LOSS_RNG_STREAM);
        Simulation {
            bandwidth_bps: config.link.bandwidth_bps(),
            one_way_delay: config.link.one_way_delay(),
            frame_bytes: config.traffic.frame_bytes(),
            frame_rate: config.traffic.frame_rate,
            total_frames: config.traffic.total_frames(),
            deadline: config.traffic.deadline(),
            decision_interval_rtts: config.adaptation.decision_interval_rtts,
            mechanism: config.mechanism,
            now: SimTime::ZERO,
            seq: 0,
            heap: BinaryHeap::new(),
            events_processed: 0,
            arq: ArqSender::new(),
            reinjection: ReinjectionQueue::new(),
            adapter: RedundancyAdapter::new(
                config.adaptation.tolerances(),
                config.adaptation.k_max,
                policy,
            ),
            loss: LossProcess::new(config.link.loss.clone(), rng),
            receiver: Receiver::default(),
            mode: SenderMode::Off,
            link_free_at: SimTime::ZERO,
            frames_generated: 0,
            next_offset: 0,
            adapter_started: false,
            reinject_due_at: None,
            trace: Trace::new(),
        }
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        debug_assert!(at >= self.now, "cannot schedule into the past");
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Scheduled { at, seq, event }));
    }

    fn run_to_completion(mut self) -> Result<Trace, SimError> {
        self.trace.push(SimTime::ZERO, TraceEvent::ConnOpen);
        if self.total_frames > 0 && self.frame_bytes > 0 {
            self.schedule(SimTime::ZERO, Event::FrameTick { index: 0 });
        } else {
            self.frames_generated = self.total_frames;
        }

        while !self.finished() {
            let Some(Reverse(next)) = self.heap.pop() else {
                break;
            };
            debug_assert!(next.at >= self.now);
            self.now = next.at;
            self.events_processed += 1;
            if self.events_processed > MAX_EVENTS {
                return Err(SimError::Runaway(MAX_EVENTS));
            }
            self.dispatch(next.event);
        }

        debug_assert_eq!(self.arq.inflight_len(), 0);
        self.trace.push(self.now, TraceEvent::ConnClose);
        Ok(self.trace)
    }

    fn finished(&self) -> bool {
        self.frames_generated == self.total_frames && self.arq.all_acked()
    }

    fn frame_tick_us(&self, index: u64) -> u64 {
        (index as u128 * 1_000_000 / self.frame_rate as u128) as u64
    }

    fn adapter_runs(&self) -> bool {
        self.mechanism != Mechanism::BaselineArq
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::FrameTick { index } => {
                self.generate_frame(index);
                if index + 1 < self.total_frames {
                    let at = SimTime::from_micros(self.frame_tick_us(index + 1));
                    self.schedule(at, Event::FrameTick { index: index + 1 });
                }
                self.pump();
            }
            Event::LinkFree => self.pump(),
            Event::PacketArrive { attempt_id, unit } => {
                self.trace.push(
                    self.now,
                    TraceEvent::Deliver {
                        attempt_id,
                        data_id: unit.data_id,
                    },
                );
                let cum = self.receiver.on_deliver(unit.data_id.0, unit.payload_bytes);
                let ack = AckRecord {
                    attempt_id,
                    data_id: unit.data_id,
                    cum_contiguous_offset: cum,
                    received_at: self.now,
                };
                self.schedule(self.now + self.one_way_delay, Event::AckArrive { ack });
            }
            Event::AckArrive { ack } => self.handle_ack(ack),
            Event::RtoExpire { attempt_id } => {
                if let Some(det) = self.arq.on_rto(attempt_id, self.now) {
                    self.handle_detection(det);
                    self.pump();
                }
            }
            Event::AdapterTick => self.handle_adapter_tick(),
            Event::ReinjectDue => {
                if self.reinject_due_at == Some(self.now) {
                    self.reinject_due_at = None;
                }
                self.pump();
                self.schedule_reinject_due();
            }
        }
    }

    fn generate_frame(&mut self, index: u64) {
        let frame_id = FrameId(index);
        let deadline_us = self.deadline.map(|d| (self.now + d).as_micros());
        let units = segment_frame(self.next_offset, frame_id, self.frame_bytes);
        self.trace.push(
            self.now,
            TraceEvent::FrameGen {
                frame_id,
                start_offset: self.next_offset,
                bytes: self.frame_bytes,
                units: units.len() as u32,
                deadline_us,
            },
        );
        self.next_offset += self.frame_bytes;
        for unit in units {
            self.arq.enqueue_unit(unit);
        }
        self.frames_generated += 1;
        self.update_mode();
    }

    fn update_mode(&mut self) {
        let mode = classify_mode(self.arq.unsent_len());
        if mode != self.mode {
            self.mode = mode;
            self.trace.push(self.now, TraceEvent::ModeSwitch { mode });
        }
    }

    fn pump(&mut self) {
        while self.link_free_at <= self.now {
            let Some(job) = self.next_job() else {
                break;
            };
            self.dispatch_send(job);
        }
    }

    fn next_job(&mut self) -> Option<Job> {
        if let Some(unit) = self.arq.pop_pending_retx() {
            return Some(Job::Retransmit(unit));
        }
        if self.mechanism.reinjects() && self.mechanism.opportunistic() {
            if let Some(t_thres) = self.adapter.t_thres() {
                if let Some(entry) =
                    self.reinjection
                        .reinject_one_due(self.now, self.adapter.k_theta(), t_thres)
                {
                    let unit = *self
                        .arq
                        .unit(entry.data_id)
                        .expect("reinjection queue entry for unknown data");
                    return Some(Job::Reinject {
                        unit,
                        trigger: ReinjectTrigger::Opportunistic,
                        count: entry.reinjection_count,
                    });
                }
            }
        }
        if let Some(unit) = self.arq.pop_unsent() {
            return Some(Job::NewData(unit));
        }
        if self.mechanism.reinjects() && self.mode == SenderMode::Off {
            if let Some(entry) = self
                .reinjection
                .reinject_one(self.now, self.adapter.k_theta())
            {
                let unit = *self
                    .arq
                    .unit(entry.data_id)
                    .expect("reinjection queue entry for unknown data");
                return Some(Job::Reinject {
                    unit,
                    trigger: ReinjectTrigger::OffMode,
                    count: entry.reinjection_count,
                });
            }
        }
        None
    }

    fn dispatch_send(&mut self, job: Job) {
        let (unit, kind) = match &job {
            Job::Retransmit(u) => (*u, AttemptKind::Retransmission),
            Job::Reinject { unit, .. } => (*unit, AttemptKind::Reinjection),
            Job::NewData(u) => (*u, AttemptKind::Initial),
        };
        let rec = self.arq.register_send(unit.data_id, kind, self.now);
        match job {
            Job::NewData(_) => {
                self.trace.push(
                    self.now,
                    TraceEvent::Send {
                        attempt_id: rec.attempt_id,
                        data_id: unit.data_id,
                        bytes: unit.payload_bytes,
                    },
                );
                self.adapter.record_send();
                self.update_mode();
            }
            Job::Retransmit(_) => {
                self.trace.push(
                    self.now,
                    TraceEvent::Retransmit {
                        attempt_id: rec.attempt_id,
                        data_id: unit.data_id,
                        bytes: unit.payload_bytes,
                        t_unit_us: rec.first_retx_t_unit.map(|d| d.as_micros() as u64),
                    },
                );
                if let Some(sample) = rec.first_retx_t_unit {
                    self.adapter.record_t_unit_sample(sample);
                }
                self.adapter.record_send();
                if self.mechanism.reinjects() {
                    self.reinjection.on_retransmitted(unit.data_id, self.now);
                    self.schedule_reinject_due();
                }
            }
            Job::Reinject { trigger, count, .. } => {
                self.trace.push(
                    self.now,
                    TraceEvent::Reinject {
                        attempt_id: rec.attempt_id,
                        data_id: unit.data_id,
                        bytes: unit.payload_bytes,
                        trigger,
                        count,
                    },
                );
                // Replicas ride the same pacer but are excluded from the
                // adapter's loss-rate denominator.
                self.schedule_reinject_due();
            }
        }

        let serialization = transmission_delay(unit.payload_bytes as u64 * 8, self.bandwidth_bps);
        self.link_free_at = self.now + serialization;
        self.schedule(self.link_free_at, Event::LinkFree);

        if self.loss.should_drop(self.now) {
            self.trace.push(
                self.now,
                TraceEvent::Drop {
                    attempt_id: rec.attempt_id,
                },
            );
        } else {
            let arrive = self.now + serialization + self.one_way_delay;
            self.schedule(
                arrive,
                Event::PacketArrive {
                    attempt_id: rec.attempt_id,
                    unit,
                },
            );
        }
        self.schedule(
            rec.rto_deadline,
            Event::RtoExpire {
                attempt_id: rec.attempt_id,
            },
        );
    }

    fn handle_ack(&mut self, ack: AckRecord) {
        self.trace.push(
            self.now,
            TraceEvent::Ack {
                attempt_id: ack.attempt_id,
                data_id: ack.data_id,
            },
        );
        let had_sample = self.arq.rtt().has_sample();
        let outcome = self.arq.on_ack(&ack, self.now);
        if !had_sample && self.arq.rtt().has_sample() && self.adapter_runs() {
            // First RTT sample anchors the decision-interval clock.
            self.adapter_started = true;
            let interval = self.arq.rtt().srtt() * self.decision_interval_rtts;
            self.schedule(self.now + interval, Event::AdapterTick);
        }
        if let Some(data_id) = outcome.newly_completed {
            if self.mechanism.reinjects() {
                self.reinjection.on_acked(data_id);
            }
        }
        for det in outcome.detections {
            self.handle_detection(det);
        }
        self.pump();
    }

    fn handle_detection(&mut self, det: Detection) {
        self.trace.push(
            self.now,
            TraceEvent::LossDetect {
                data_id: det.data_id,
                attempt_id: det.attempt_id,
                cause: det.cause,
            },
        );
        self.adapter.record_loss_detection();
        self.arq.queue_retransmission(det.data_id);
    }

    fn handle_adapter_tick(&mut self) {
        let decision = self.adapter.on_interval_end();
        self.trace.push(self.now, TraceEvent::from(&decision));
        let interval = self.arq.rtt().srtt() * self.decision_interval_rtts;
        self.schedule(self.now + interval, Event::AdapterTick);
        self.schedule_reinject_due();
        self.pump();
    }

    /// Keeps one timer pointed at the earliest moment a queued entry becomes
    /// due for opportunistic reinjection.
    fn schedule_reinject_due(&mut self) {
        if !(self.mechanism.reinjects() && self.mechanism.opportunistic()) {
            return;
        }
        let Some(t_thres) = self.adapter.t_thres() else {
            return;
        };
        let Some(due) = self
            .reinjection
            .next_due_at(t_thres, self.adapter.k_theta())
        else {
            return;
        };
        // Due-ness is strict, so fire one microsecond past the threshold. An
        // already-due entry needs no timer: it is only waiting for the link,
        // and the pending LinkFree pump will take it.
        let at = SimTime::from_micros(due.as_micros() + 1);
        if at <= self.now {
            return;
        }
        if self.reinject_due_at.is_none_or(|t| t > at) {
            self.reinject_due_at = Some(at);
            self.schedule(at, Event::ReinjectDue);
        }
    }
}
