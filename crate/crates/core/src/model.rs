//! Shared domain types: application data units, wire transmission attempts,
//! frames, and the sender's on/off mode.

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Maximum application payload carried by one wire packet, in bytes.
pub const MTU_PAYLOAD: u32 = 1300;

/// Identifies one unit of application data for the whole connection lifetime.
/// Realized as the unit's stream offset, which is unique per connection and
/// survives any number of retransmissions or reinjections.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct DataId(pub u64);

/// Wire packet number. Every transmission attempt, including retransmissions
/// and reinjections of the same data, gets a fresh one.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct AttemptId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameId(pub u64);

/// One MTU-or-smaller slice of a frame, addressed by stream offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataUnit {
    pub data_id: DataId,
    pub frame_id: FrameId,
    pub payload_bytes: u32,
}

impl DataUnit {
    pub fn new(offset: u64, frame_id: FrameId, payload_bytes: u32) -> Self {
        assert!(
            payload_bytes > 0 && payload_bytes <= MTU_PAYLOAD,
            "payload must be in (0, {MTU_PAYLOAD}] bytes"
        );
        DataUnit {
            data_id: DataId(offset),
            frame_id,
            payload_bytes,
        }
    }
}

/// How an attempt came to be sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttemptKind {
    /// First transmission of the data unit.
    Initial,
    /// Resend triggered by a loss detection.
    Retransmission,
    /// Proactive replica of already-retransmitted, still-unacked data.
    Reinjection,
}

impl AttemptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttemptKind::Initial => "initial",
            AttemptKind::Retransmission => "retransmission",
            AttemptKind::Reinjection => "reinjection",
        }
    }
}

/// Ground-truth outcome of an attempt, known to the simulator when the packet
/// crosses the link. The sender never observes this directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Delivered { at: SimTime },
    Dropped,
}

/// A single wire transmission of a data unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmissionAttempt {
    pub attempt_id: AttemptId,
    pub data_id: DataId,
    pub kind: AttemptKind,
    pub sent_at: SimTime,
}

/// An encoded media frame: a contiguous run of data units sharing a deadline.
#[derive(Debug, Clone)]
pub struct Frame {
    pub frame_id: FrameId,
    pub generated_at: SimTime,
    /// Present only when deadline accounting is enabled for the run.
    pub deadline_at: Option<SimTime>,
    pub data_units: Vec<DataUnit>,
}

/// Whether the sender currently has unsent application data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SenderMode {
    On,
    Off,
}

impl SenderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SenderMode::On => "on",
            SenderMode::Off => "off",
        }
    }
}

/// Off-mode holds exactly when the send queue has no unsent application data.
/// Retransmissions and replicas pending do not count: the mode tracks fresh
/// data availability only.
pub fn classify_mode(send_queue_len: usize) -> SenderMode {
    if send_queue_len == 0 {
        SenderMode::Off
    } else {
        SenderMode::On
    }
}

/// Splits `frame_bytes` greedily into full-MTU units plus one remainder,
/// assigning consecutive stream offsets starting at `start_offset`.
pub fn segment_frame(start_offset: u64, frame_id: FrameId, frame_bytes: u64) -> Vec<DataUnit> {
    let mut units = Vec::new();
    let mut offset = start_offset;
    let mut remaining = frame_bytes;
    while remaining > 0 {
        let take = remaining.min(MTU_PAYLOAD as u64) as u32;
        units.push(DataUnit::new(offset, frame_id, take));
        offset += take as u64;
        remaining -= take as u64;
    }
    units
}
