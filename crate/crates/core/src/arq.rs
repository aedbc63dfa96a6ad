//! Baseline reliable-delivery machinery: send queue, transmission attempts,
//! ACK processing, and loss detection by dup-ACK threshold or timeout.
//!
//! Exactly one attempt per unacknowledged data unit is monitored for loss at
//! any time: the latest one. Retransmitting or reinjecting renumbers the data
//! onto a fresh attempt and shifts monitoring to it. An ACK for any attempt
//! of a data unit completes that unit and ends all monitoring for it.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Duration;

use crate::model::{AttemptId, AttemptKind, DataId, DataUnit};
use crate::rtt::RttEstimator;
use crate::time::SimTime;
use crate::trace::LossCause;

/// An attempt is judged lost once this many higher-numbered attempts have
/// been acknowledged.
pub const FACK_THRESHOLD: u32 = 3;

/// Receiver feedback for one delivered attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckRecord {
    pub attempt_id: AttemptId,
    pub data_id: DataId,
    /// Highest contiguous stream offset delivered so far.
    pub cum_contiguous_offset: u64,
    pub received_at: SimTime,
}

#[derive(Debug, Clone, Copy)]
struct InflightAttempt {
    data_id: DataId,
    #[allow(dead_code)] // kept for debugging; read by tests
    kind: AttemptKind,
    sent_at: SimTime,
    rto_deadline: SimTime,
    /// Acknowledged attempts with a higher attempt id, counted while this
    /// attempt is the monitored one for its data.
    higher_acked: u32,
}

#[derive(Debug)]
struct UnitState {
    unit: DataUnit,
    acked: bool,
    latest_attempt: Option<AttemptId>,
    initial_sent_at: Option<SimTime>,
    retransmitted: bool,
    /// Attempts sent for this unit that are neither acked nor judged lost.
    outstanding: Vec<AttemptId>,
}

/// Result of registering a wire send.
#[derive(Debug, Clone, Copy)]
pub struct SendRecord {
    pub attempt_id: AttemptId,
    pub rto_deadline: SimTime,
    /// Loss detection time, present on the data unit's first retransmission:
    /// elapsed from the initial send to this resend.
    pub first_retx_t_unit: Option<Duration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    pub data_id: DataId,
    pub attempt_id: AttemptId,
    pub cause: LossCause,
}

#[derive(Debug, Default)]
pub struct AckOutcome {
    /// Set when this ACK completed the data unit.
    pub newly_completed: Option<DataId>,
    /// RTT sample, taken only when the acked attempt was the monitored one.
    pub rtt_sample: Option<Duration>,
    /// Attempts judged lost by the dup-ACK threshold as a consequence of
    /// this ACK, in ascending attempt order.
    pub detections: Vec<Detection>,
}

#[derive(Debug, Default)]
pub struct ArqSender {
    send_queue: VecDeque<DataUnit>,
    pending_retx: VecDeque<DataId>,
    units: HashMap<u64, UnitState>,
    inflight: BTreeMap<u64, InflightAttempt>,
    next_attempt: u64,
    rtt: RttEstimator,
    total_units: u64,
    acked_units: u64,
}

impl ArqSender {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rtt(&self) -> &RttEstimator {
        &self.rtt
    }

    pub fn total_units(&self) -> u64 {
        self.total_units
    }

    pub fn acked_units(&self) -> u64 {
        self.acked_units
    }

    pub fn all_acked(&self) -> bool {
        self.acked_units == self.total_units
    }

    pub fn unsent_len(&self) -> usize {
        self.send_queue.len()
    }

    pub fn inflight_len(&self) -> usize {
        self.inflight.len()
    }

    pub fn enqueue_unit(&mut self, unit: DataUnit) {
        let prev = self.units.insert(
            unit.data_id.0,
            UnitState {
                unit,
                acked: false,
                latest_attempt: None,
                initial_sent_at: None,
                retransmitted: false,
                outstanding: Vec::new(),
            },
        );
        debug_assert!(prev.is_none(), "data ids must be unique per connection");
        self.send_queue.push_back(unit);
        self.total_units += 1;
    }

    pub fn pop_unsent(&mut self) -> Option<DataUnit> {
        self.send_queue.pop_front()
    }

    pub fn queue_retransmission(&mut self, data_id: DataId) {
        self.pending_retx.push_back(data_id);
    }

    /// Next data unit awaiting retransmission, skipping any that were
    /// acknowledged while waiting.
    pub fn pop_pending_retx(&mut self) -> Option<DataUnit> {
        while let Some(id) = self.pending_retx.pop_front() {
            let state = &self.units[&id.0];
            if !state.acked {
                return Some(state.unit);
            }
        }
        None
    }

    pub fn unit(&self, data_id: DataId) -> Option<&DataUnit> {
        self.units.get(&data_id.0).map(|s| &s.unit)
    }

    /// Records a wire send of `data_id`, renumbering it onto a fresh attempt
    /// that becomes the unit's monitored attempt.
    pub fn register_send(
        &mut self,
        data_id: DataId,
        kind: AttemptKind,
        now: SimTime,
    ) -> SendRecord {
        let attempt_id = AttemptId(self.next_attempt);
        self.next_attempt += 1;
        let rto_deadline = now + self.rtt.rto();
        let state = self
            .units
            .get_mut(&data_id.0)
            .expect("send of unknown data unit");
        debug_assert!(!state.acked, "must not send acked data");
        let mut first_retx_t_unit = None;
        match kind {
            AttemptKind::Initial => {
                debug_assert!(state.initial_sent_at.is_none(), "duplicate initial send");
                state.initial_sent_at = Some(now);
            }
            AttemptKind::Retransmission => {
                if !state.retransmitted {
                    state.retransmitted = true;
                    let initial = state
                        .initial_sent_at
                        .expect("retransmission before initial send");
                    first_retx_t_unit = Some(now - initial);
                }
            }
            AttemptKind::Reinjection => {
                debug_assert!(state.retransmitted, "reinjection before retransmission");
            }
        }
        state.latest_attempt = Some(attempt_id);
        state.outstanding.push(attempt_id);
        self.inflight.insert(
            attempt_id.0,
            InflightAttempt {
                data_id,
                kind,
                sent_at: now,
                rto_deadline,
                higher_acked: 0,
            },
        );
        SendRecord {
            attempt_id,
            rto_deadline,
            first_retx_t_unit,
        }
    }

    /// Processes an ACK arrival: completes the data, samples RTT when the
    /// acked attempt is the monitored one, and judges older monitored
    /// attempts lost once enough higher attempts have been acked.
    pub fn on_ack(&mut self, ack: &AckRecord, now: SimTime) -> AckOutcome {
        let mut outcome = AckOutcome::default();
        let state = self
            .units
            .get_mut(&ack.data_id.0)
            .expect("ack for unknown data unit");
        if state.acked {
            // Later replica of already-completed data: no state change.
            return outcome;
        }

        if state.latest_attempt == Some(ack.attempt_id) {
            if let Some(attempt) = self.inflight.get(&ack.attempt_id.0) {
                let sample = now - attempt.sent_at;
                self.rtt.update(sample);
                outcome.rtt_sample = Some(sample);
            }
        }

        state.acked = true;
        state.latest_attempt = None;
        for aid in state.outstanding.drain(..) {
            self.inflight.remove(&aid.0);
        }
        self.acked_units += 1;
        outcome.newly_completed = Some(ack.data_id);

        // Dup-ACK accounting: every outstanding monitored attempt older than
        // the acked one has seen one more higher acknowledgment.
        let mut judged = Vec::new();
        for (&aid, attempt) in self.inflight.range_mut(..ack.attempt_id.0) {
            let is_monitored =
                self.units[&attempt.data_id.0].latest_attempt == Some(AttemptId(aid));
            if !is_monitored {
                continue;
            }
            attempt.higher_acked += 1;
            if attempt.higher_acked >= FACK_THRESHOLD {
                judged.push(AttemptId(aid));
            }
        }
        for aid in judged {
            let attempt = self.inflight.remove(&aid.0).unwrap();
            let unit = self.units.get_mut(&attempt.data_id.0).unwrap();
            unit.outstanding.retain(|&a| a != aid);
            outcome.detections.push(Detection {
                data_id: attempt.data_id,
                attempt_id: aid,
                cause: LossCause::Fack,
            });
        }
        outcome
    }

    /// Timeout check for one attempt. Fires only if the attempt is still the
    /// monitored one and its deadline has passed; stale timers are no-ops.
    pub fn on_rto(&mut self, attempt_id: AttemptId, now: SimTime) -> Option<Detection> {
        let attempt = self.inflight.get(&attempt_id.0)?;
        if self.units[&attempt.data_id.0].latest_attempt != Some(attempt_id) {
            return None;
        }
        if now < attempt.rto_deadline {
            return None;
        }
        let attempt = self.inflight.remove(&attempt_id.0).unwrap();
        let unit = self.units.get_mut(&attempt.data_id.0).unwrap();
        unit.outstanding.retain(|&a| a != attempt_id);
        Some(Detection {
            data_id: attempt.data_id,
            attempt_id,
            cause: LossCause::Rto,
        })
    }

    #[cfg(test)]
    fn kind_of(&self, attempt_id: AttemptId) -> Option<AttemptKind> {
        self.inflight.get(&attempt_id.0).map(|a| a.kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrameId;

    fn unit(offset: u64) -> DataUnit {
        DataUnit::new(offset, FrameId(0), 1300)
    }

    fn us(v: u64) -> SimTime {
        SimTime::from_micros(v)
    }

    fn ack(sender: &ArqSender, attempt: AttemptId, data: DataId, at: SimTime) -> AckRecord {
        let _ = sender;
        AckRecord {
            attempt_id: attempt,
            data_id: data,
            cum_contiguous_offset: 0,
            received_at: at,
        }
    }

    fn send_initial(sender: &mut ArqSender, offset: u64, at: SimTime) -> AttemptId {
        sender.enqueue_unit(unit(offset));
        let u = sender.pop_unsent().unwrap();
        sender
            .register_send(u.data_id, AttemptKind::Initial, at)
            .attempt_id
    }

    #[test]
    fn ack_of_latest_attempt_completes_and_samples_rtt() {
        let mut s = ArqSender::new();
        let a = send_initial(&mut s, 0, us(0));
        let out = s.on_ack(&ack(&s, a, DataId(0), us(60_000)), us(60_000));
        assert_eq!(out.newly_completed, Some(DataId(0)));
        assert_eq!(out.rtt_sample, Some(Duration::from_millis(60)));
        assert!(s.all_acked());
    }

    #[test]
    fn ack_of_superseded_attempt_completes_without_rtt_sample() {
        let mut s = ArqSender::new();
        let a0 = send_initial(&mut s, 0, us(0));
        // Monitoring shifts to a retransmission; then the old attempt's ack
        // arrives anyway.
        s.queue_retransmission(DataId(0));
        let u = s.pop_pending_retx().unwrap();
        s.register_send(u.data_id, AttemptKind::Retransmission, us(10_000));
        let out = s.on_ack(&ack(&s, a0, DataId(0), us(61_000)), us(61_000));
        assert_eq!(out.newly_completed, Some(DataId(0)));
        assert_eq!(out.rtt_sample, None);
        assert!(!s.rtt().has_sample());
    }

    #[test]
    fn duplicate_ack_for_completed_data_is_noop() {
        let mut s = ArqSender::new();
        let a = send_initial(&mut s, 0, us(0));
        s.on_ack(&ack(&s, a, DataId(0), us(60_000)), us(60_000));
        let out = s.on_ack(&ack(&s, a, DataId(0), us(61_000)), us(61_000));
        assert!(out.newly_completed.is_none());
        assert!(out.rtt_sample.is_none());
        assert!(out.detections.is_empty());
        assert_eq!(s.acked_units(), 1);
    }

    #[test]
    fn third_higher_ack_judges_attempt_lost() {
        let mut s = ArqSender::new();
        let mut attempts = Vec::new();
        for i in 0..5u64 {
            attempts.push(send_initial(&mut s, i * 1300, us(i * 867)));
        }
        // Attempt 0's packet is dropped; acks for attempts 1..=3 arrive.
        let mut detections = Vec::new();
        for i in 1..=3u64 {
            let out = s.on_ack(
                &ack(
                    &s,
                    attempts[i as usize],
                    DataId(i * 1300),
                    us(60_000 + i * 867),
                ),
                us(60_000 + i * 867),
            );
            detections.extend(out.detections);
        }
        assert_eq!(
            detections,
            vec![Detection {
                data_id: DataId(0),
                attempt_id: attempts[0],
                cause: LossCause::Fack,
            }]
        );
    }

    #[test]
    fn rto_fires_only_for_monitored_overdue_attempts() {
        let mut s = ArqSender::new();
        let a = send_initial(&mut s, 0, us(0));
        // Deadline is 500 ms (no RTT sample yet).
        assert!(s.on_rto(a, us(400_000)).is_none());
        let det = s.on_rto(a, us(500_000)).unwrap();
        assert_eq!(det.cause, LossCause::Rto);
        assert_eq!(det.data_id, DataId(0));
        // Judged attempts are gone; a second timer on it is stale.
        assert!(s.on_rto(a, us(600_000)).is_none());
    }

    #[test]
    fn monitoring_shifts_along_the_renumbering_chain() {
        // A data unit is retransmitted, reinjected twice, then the last
        // replica is judged lost and retransmitted again: monitoring follows
        // the newest attempt the whole way.
        let mut s = ArqSender::new();
        let a1 = send_initial(&mut s, 0, us(0));

        let r = s.register_send(DataId(0), AttemptKind::Retransmission, us(63_000));
        assert_eq!(r.first_retx_t_unit, Some(Duration::from_millis(63)));
        let a2 = r.attempt_id;
        assert!(a2 > a1);

        let a3 = s
            .register_send(DataId(0), AttemptKind::Reinjection, us(84_000))
            .attempt_id;
        let r = s.register_send(DataId(0), AttemptKind::Reinjection, us(105_000));
        // Only the first retransmission carries a detection-time sample.
        assert_eq!(r.first_retx_t_unit, None);
        let a4 = r.attempt_id;
        assert_eq!(s.kind_of(a4), Some(AttemptKind::Reinjection));

        // Acks of three later attempts judge only the newest attempt lost.
        for i in 0..3u64 {
            let b = send_initial(&mut s, 1300 + i * 1300, us(110_000 + i * 867));
            let out = s.on_ack(
                &ack(&s, b, DataId(1300 + i * 1300), us(171_000 + i * 867)),
                us(171_000 + i * 867),
            );
            if i < 2 {
                assert!(out.detections.is_empty());
            } else {
                assert_eq!(out.detections.len(), 1);
                assert_eq!(out.detections[0].attempt_id, a4);
                assert_eq!(out.detections[0].data_id, DataId(0));
            }
        }
        let _ = a3;

        // The follow-up retransmission renumbers again and an ack of it
        // finally completes the unit.
        let a5 = s
            .register_send(DataId(0), AttemptKind::Retransmission, us(175_000))
            .attempt_id;
        let out = s.on_ack(&ack(&s, a5, DataId(0), us(236_000)), us(236_000));
        assert_eq!(out.newly_completed, Some(DataId(0)));
        assert_eq!(s.inflight_len(), 0);
    }

    #[test]
    fn pending_retransmissions_skip_acked_data() {
        let mut s = ArqSender::new();
        let a = send_initial(&mut s, 0, us(0));
        send_initial(&mut s, 1300, us(867));
        s.queue_retransmission(DataId(0));
        s.queue_retransmission(DataId(1300));
        s.on_ack(&ack(&s, a, DataId(0), us(60_000)), us(60_000));
        assert_eq!(s.pop_pending_retx().unwrap().data_id, DataId(1300));
        assert!(s.pop_pending_retx().is_none());
    }
}
