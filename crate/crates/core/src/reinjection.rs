//! Sender-side reinjection queue.
//!
//! Lost data that has been retransmitted but not yet acknowledged sits in a
//! queue ordered by the timestamp of its last send. Each entry records how
//! many replicas have been injected for it (`reinjection_count`) and when it
//! was last sent (`last_sent`). Entries leave the queue when the data is
//! acknowledged or when another replica would exceed the redundancy level.
//!
//! Replicas go out on two triggers: whenever the sender is in off-mode and
//! has a spare send slot, and opportunistically once an entry has been silent
//! for longer than T_thres, regardless of mode.

use std::collections::{HashMap, VecDeque};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::DataId;
use crate::time::SimTime;

/// Opportunistic reinjection threshold: T_thres = T_unit / (K_theta + 1).
/// Spacing replicas this far apart fits exactly K of them inside one loss
/// detection time.
pub fn compute_t_thres(t_unit: Duration, k_theta: u32) -> Duration {
    Duration::from_micros((t_unit.as_micros() as u64) / (k_theta as u64 + 1))
}

/// What prompted a replica to be sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReinjectTrigger {
    OffMode,
    Opportunistic,
}

impl ReinjectTrigger {
    pub fn as_str(self) -> &'static str {
        match self {
            ReinjectTrigger::OffMode => "off_mode",
            ReinjectTrigger::Opportunistic => "opportunistic",
        }
    }
}

/// Status-table row for one piece of retransmitted, unacknowledged data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReinjectionEntry {
    pub data_id: DataId,
    /// Replicas injected so far (A_i).
    pub reinjection_count: u32,
    /// Timestamp of the last retransmission or reinjection (T_stmp).
    pub last_sent: SimTime,
}

#[derive(Debug, Clone, Default)]
pub struct ReinjectionQueue {
    entries: VecDeque<ReinjectionEntry>,
    /// Replica counts of data dropped from the queue as exhausted. The count
    /// is per packet for the whole recovery: if the data is retransmitted
    /// again it rejoins the queue with its count intact, so a packet can
    /// never collect more replicas than the level allows across its lifetime.
    exhausted: HashMap<u64, u32>,
}

impl ReinjectionQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ReinjectionEntry> {
        self.entries.iter()
    }

    fn assert_sorted(&self) {
        debug_assert!(
            self.entries
                .iter()
                .zip(self.entries.iter().skip(1))
                .all(|(a, b)| a.last_sent <= b.last_sent),
            "queue must stay sorted by last send time"
        );
    }

    /// Registers an ARQ retransmission of `data_id`. A first retransmission
    /// inserts a fresh entry at the tail; a repeat retransmission moves the
    /// existing entry to the tail with its replica count preserved.
    pub fn on_retransmitted(&mut self, data_id: DataId, now: SimTime) {
        if let Some(pos) = self.entries.iter().position(|e| e.data_id == data_id) {
            let mut entry = self.entries.remove(pos).unwrap();
            entry.last_sent = now;
            self.entries.push_back(entry);
        } else {
            self.entries.push_back(ReinjectionEntry {
                data_id,
                reinjection_count: self.exhausted.remove(&data_id.0).unwrap_or(0),
                last_sent: now,
            });
        }
        self.assert_sorted();
    }

    /// An acknowledgment for `data_id` ends its recovery: the entry (if any)
    /// is removed and no further replicas will be sent.
    pub fn on_acked(&mut self, data_id: DataId) {
        if let Some(pos) = self.entries.iter().position(|e| e.data_id == data_id) {
            self.entries.remove(pos);
        }
        self.exhausted.remove(&data_id.0);
    }

    /// Takes one entry for reinjection, head first. Entries whose next replica
    /// would exceed `k_theta` are dropped on inspection. The emitted entry has
    /// its count bumped and moves to the tail stamped `now`; the updated entry
    /// is returned.
    pub fn reinject_one(&mut self, now: SimTime, k_theta: u32) -> Option<ReinjectionEntry> {
        self.pop_eligible(now, k_theta, None)
    }

    /// Like [`reinject_one`](Self::reinject_one), but only emits the head if
    /// it has been silent for longer than `t_thres`.
    pub fn reinject_one_due(
        &mut self,
        now: SimTime,
        k_theta: u32,
        t_thres: Duration,
    ) -> Option<ReinjectionEntry> {
        self.pop_eligible(now, k_theta, Some(t_thres))
    }

    fn pop_eligible(
        &mut self,
        now: SimTime,
        k_theta: u32,
        t_thres: Option<Duration>,
    ) -> Option<ReinjectionEntry> {
        while let Some(head) = self.entries.front() {
            if head.reinjection_count + 1 > k_theta {
                // Exhausted under the current level; native ARQ still
                // monitors this data's last attempt. The count is kept in
                // case the data is retransmitted again.
                let head = self.entries.pop_front().unwrap();
                self.exhausted
                    .insert(head.data_id.0, head.reinjection_count);
                continue;
            }
            if let Some(thres) = t_thres {
                if now.saturating_since(head.last_sent) <= thres {
                    return None;
                }
            }
            let mut entry = self.entries.pop_front().unwrap();
            entry.reinjection_count += 1;
            entry.last_sent = now;
            self.entries.push_back(entry);
            self.assert_sorted();
            return Some(entry);
        }
        None
    }

    /// All entries whose silence exceeds `t_thres` and that still have replica
    /// budget, in queue order. Pure query; callers reinject via
    /// [`reinject_one`](Self::reinject_one) semantics.
    pub fn opportunistic_due(&self, now: SimTime, t_thres: Duration, k_theta: u32) -> Vec<DataId> {
        self.entries
            .iter()
            .filter(|e| {
                now.saturating_since(e.last_sent) > t_thres && e.reinjection_count < k_theta
            })
            .map(|e| e.data_id)
            .collect()
    }

    /// When the earliest entry with replica budget becomes due, or None if no
    /// entry can ever fire under the current level.
    pub fn next_due_at(&self, t_thres: Duration, k_theta: u32) -> Option<SimTime> {
        self.entries
            .iter()
            .find(|e| e.reinjection_count < k_theta)
            .map(|e| e.last_sent + t_thres)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn us(v: u64) -> SimTime {
        SimTime::from_micros(v)
    }

    fn ids(queue: &ReinjectionQueue) -> Vec<u64> {
        queue.entries().map(|e| e.data_id.0).collect()
    }

    #[test]
    fn t_thres_formula() {
        assert_eq!(
            compute_t_thres(Duration::from_millis(60), 2),
            Duration::from_millis(20)
        );
        assert_eq!(
            compute_t_thres(Duration::from_millis(60), 0),
            Duration::from_millis(60)
        );
        assert_eq!(compute_t_thres(Duration::ZERO, 5), Duration::ZERO);
    }

    #[test]
    fn retransmission_inserts_at_tail() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(5));
        assert_eq!(ids(&q), vec![1]);
        q.on_retransmitted(DataId(2), us(7));
        assert_eq!(ids(&q), vec![1, 2]);
    }

    #[test]
    fn repeat_retransmission_moves_to_tail_preserving_count() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(5));
        q.reinject_one(us(6), 2); // count -> 1
        q.on_retransmitted(DataId(2), us(7));
        q.on_retransmitted(DataId(1), us(9));
        assert_eq!(ids(&q), vec![2, 1]);
        let entry = q.entries().find(|e| e.data_id == DataId(1)).unwrap();
        assert_eq!(entry.reinjection_count, 1);
        assert_eq!(entry.last_sent, us(9));
    }

    #[test]
    fn ack_removes_entry_preserving_order() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(1));
        q.on_retransmitted(DataId(2), us(2));
        q.on_retransmitted(DataId(3), us(3));
        q.on_acked(DataId(2));
        assert_eq!(ids(&q), vec![1, 3]);
        q.on_acked(DataId(9)); // absent: no-op
        assert_eq!(ids(&q), vec![1, 3]);
    }

    #[test]
    fn reinject_one_bumps_count_and_cycles() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(0));
        assert_eq!(
            q.reinject_one(us(10), 2).map(|e| e.data_id),
            Some(DataId(1))
        );
        let entry = q.entries().next().unwrap();
        assert_eq!(entry.reinjection_count, 1);
        assert_eq!(entry.last_sent, us(10));
    }

    #[test]
    fn exhausted_entry_is_dropped_on_inspection() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(0));
        assert_eq!(q.reinject_one(us(1), 2).map(|e| e.data_id), Some(DataId(1)));
        assert_eq!(q.reinject_one(us(2), 2).map(|e| e.data_id), Some(DataId(1)));
        assert!(q.reinject_one(us(3), 2).is_none());
        assert!(q.is_empty());
    }

    #[test]
    fn empty_queue_yields_none() {
        let mut q = ReinjectionQueue::new();
        assert!(q.reinject_one(us(0), 5).is_none());
    }

    #[test]
    fn opportunistic_due_respects_threshold_and_budget() {
        let thres = Duration::from_millis(20);
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(0));

        assert_eq!(q.opportunistic_due(us(25_000), thres, 2), vec![DataId(1)]);
        assert!(q.opportunistic_due(us(15_000), thres, 2).is_empty());
        // Silence exactly equal to the threshold does not fire.
        assert!(q.opportunistic_due(us(20_000), thres, 2).is_empty());
        // No budget left: never due.
        assert!(q.opportunistic_due(us(100_000), thres, 0).is_empty());
    }

    #[test]
    fn due_pop_skips_exhausted_heads() {
        let thres = Duration::from_millis(10);
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(0));
        q.reinject_one(us(1), 1); // exhaust under k = 1
        q.on_retransmitted(DataId(2), us(5));

        // Head (data 1) is exhausted and gets dropped; data 2 is due.
        assert_eq!(
            q.reinject_one_due(us(20_000), 1, thres).map(|e| e.data_id),
            Some(DataId(2))
        );
        assert_eq!(ids(&q), vec![2]);
    }

    #[test]
    fn replica_budget_survives_exhaustion_and_re_retransmission() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(0));
        q.reinject_one(us(1), 2);
        q.reinject_one(us(2), 2);
        // Exhausted: inspection drops the entry.
        assert!(q.reinject_one(us(3), 2).is_none());
        // The last replica was lost, so ARQ retransmits the data again. Its
        // lifetime count carries over: no more replicas at the same level.
        q.on_retransmitted(DataId(1), us(100));
        assert!(q.reinject_one(us(101), 2).is_none());
        // A higher level later re-opens the budget from where it stopped.
        q.on_retransmitted(DataId(1), us(200));
        let entry = q.reinject_one(us(201), 3).unwrap();
        assert_eq!(entry.reinjection_count, 3);
        // An ack clears the lifetime record entirely.
        q.on_acked(DataId(1));
        assert!(q.is_empty());
    }

    #[test]
    fn lower_level_drops_stale_entries_lazily() {
        let mut q = ReinjectionQueue::new();
        q.on_retransmitted(DataId(1), us(0));
        q.reinject_one(us(1), 5);
        q.reinject_one(us(2), 5);
        // Level dropped to 1: the entry (count 2) dies at next inspection.
        assert!(q.reinject_one(us(3), 1).is_none());
        assert!(q.is_empty());
    }

    #[test]
    fn order_invariant_under_random_events() {
        let mut q = ReinjectionQueue::new();
        let mut t = 0;
        for step in 0u64..500 {
            t += 1 + step % 3;
            match step % 5 {
                0 | 3 => q.on_retransmitted(DataId(step % 7), us(t)),
                1 => {
                    q.reinject_one(us(t), 3);
                }
                2 => q.on_acked(DataId((step + 2) % 7)),
                _ => {
                    q.reinject_one_due(us(t), 3, Duration::from_micros(2));
                }
            }
            let stamps: Vec<_> = q.entries().map(|e| e.last_sent).collect();
            assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
