//! Event trace. Every run produces an ordered log of timestamped events from
//! which all metrics are computed after the fact. The text form is one record
//! per line, `time_us kind key=value...`, with a stable field order so that
//! identical runs serialize to identical bytes.

use std::fmt::Write as _;

use crate::adapter::Decision;
use crate::model::{AttemptId, AttemptKind, DataId, FrameId, SenderMode};
use crate::reinjection::ReinjectTrigger;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    ConnOpen,
    ConnClose,
    FrameGen {
        frame_id: FrameId,
        start_offset: u64,
        bytes: u64,
        units: u32,
        deadline_us: Option<u64>,
    },
    ModeSwitch {
        mode: SenderMode,
    },
    /// Initial transmission of a data unit.
    Send {
        attempt_id: AttemptId,
        data_id: DataId,
        bytes: u32,
    },
    /// ARQ resend after a loss detection. Carries the loss detection time
    /// sample on the data unit's first retransmission.
    Retransmit {
        attempt_id: AttemptId,
        data_id: DataId,
        bytes: u32,
        t_unit_us: Option<u64>,
    },
    /// Proactive replica of retransmitted, unacknowledged data.
    Reinject {
        attempt_id: AttemptId,
        data_id: DataId,
        bytes: u32,
        trigger: ReinjectTrigger,
        count: u32,
    },
    /// Ground truth: the attempt was dropped on the wire.
    Drop {
        attempt_id: AttemptId,
    },
    /// Arrival at the receiver.
    Deliver {
        attempt_id: AttemptId,
        data_id: DataId,
    },
    /// ACK arrival back at the sender.
    Ack {
        attempt_id: AttemptId,
        data_id: DataId,
    },
    LossDetect {
        data_id: DataId,
        attempt_id: AttemptId,
        cause: LossCause,
    },
    AdapterDecision {
        interval: u64,
        loss_rate: f64,
        t_unit_us: u64,
        k_alpha: u32,
        k_beta: u32,
        k_gamma: u32,
        k_theta: u32,
        t_thres_us: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossCause {
    Fack,
    Rto,
}

impl LossCause {
    pub fn as_str(self) -> &'static str {
        match self {
            LossCause::Fack => "fack",
            LossCause::Rto => "rto",
        }
    }
}

impl TraceEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::ConnOpen => "conn_open",
            TraceEvent::ConnClose => "conn_close",
            TraceEvent::FrameGen { .. } => "frame_gen",
            TraceEvent::ModeSwitch { .. } => "mode_switch",
            TraceEvent::Send { .. } => "send",
            TraceEvent::Retransmit { .. } => "retransmit",
            TraceEvent::Reinject { .. } => "reinject",
            TraceEvent::Drop { .. } => "drop",
            TraceEvent::Deliver { .. } => "deliver",
            TraceEvent::Ack { .. } => "ack",
            TraceEvent::LossDetect { .. } => "loss_detect",
            TraceEvent::AdapterDecision { .. } => "adapter",
        }
    }

    /// Kind of the wire attempt this event creates, if any.
    pub fn attempt_kind(&self) -> Option<AttemptKind> {
        match self {
            TraceEvent::Send { .. } => Some(AttemptKind::Initial),
            TraceEvent::Retransmit { .. } => Some(AttemptKind::Retransmission),
            TraceEvent::Reinject { .. } => Some(AttemptKind::Reinjection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    events: Vec<(SimTime, TraceEvent)>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, at: SimTime, event: TraceEvent) {
        debug_assert!(
            self.events.last().is_none_or(|(t, _)| *t <= at),
            "trace must be appended in time order"
        );
        self.events.push((at, event));
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SimTime, TraceEvent)> {
        self.events.iter()
    }

    /// Serializes the whole trace to its newline-delimited text form.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 48);
        for (at, event) in &self.events {
            write_line(&mut out, *at, event);
        }
        out
    }
}

fn write_line(out: &mut String, at: SimTime, event: &TraceEvent) {
    let _ = write!(out, "{} {}", at.as_micros(), event.kind());
    match event {
        TraceEvent::ConnOpen | TraceEvent::ConnClose => {}
        TraceEvent::FrameGen {
            frame_id,
            start_offset,
            bytes,
            units,
            deadline_us,
        } => {
            let _ = write!(
                out,
                " frame={} offset={} bytes={} units={}",
                frame_id.0, start_offset, bytes, units
            );
            if let Some(d) = deadline_us {
                let _ = write!(out, " deadline_us={d}");
            }
        }
        TraceEvent::ModeSwitch { mode } => {
            let _ = write!(out, " mode={}", mode.as_str());
        }
        TraceEvent::Send {
            attempt_id,
            data_id,
            bytes,
        } => {
            let _ = write!(
                out,
                " attempt={} data={} bytes={}",
                attempt_id.0, data_id.0, bytes
            );
        }
        TraceEvent::Retransmit {
            attempt_id,
            data_id,
            bytes,
            t_unit_us,
        } => {
            let _ = write!(
                out,
                " attempt={} data={} bytes={}",
                attempt_id.0, data_id.0, bytes
            );
            if let Some(t) = t_unit_us {
                let _ = write!(out, " t_unit_us={t}");
            }
        }
        TraceEvent::Reinject {
            attempt_id,
            data_id,
            bytes,
            trigger,
            count,
        } => {
            let _ = write!(
                out,
                " attempt={} data={} bytes={} trigger={} count={}",
                attempt_id.0,
                data_id.0,
                bytes,
                trigger.as_str(),
                count
            );
        }
        TraceEvent::Drop { attempt_id } => {
            let _ = write!(out, " attempt={}", attempt_id.0);
        }
        TraceEvent::Deliver {
            attempt_id,
            data_id,
        }
        | TraceEvent::Ack {
            attempt_id,
            data_id,
        } => {
            let _ = write!(out, " attempt={} data={}", attempt_id.0, data_id.0);
        }
        TraceEvent::LossDetect {
            data_id,
            attempt_id,
            cause,
        } => {
            let _ = write!(
                out,
                " data={} attempt={} cause={}",
                data_id.0,
                attempt_id.0,
                cause.as_str()
            );
        }
        TraceEvent::AdapterDecision {
            interval,
            loss_rate,
            t_unit_us,
            k_alpha,
            k_beta,
            k_gamma,
            k_theta,
            t_thres_us,
        } => {
            let _ = write!(
                out,
                " interval={interval} r={loss_rate:.6} t_unit_us={t_unit_us} k_alpha={k_alpha} k_beta={k_beta} k_gamma={k_gamma} k_theta={k_theta}"
            );
            if let Some(t) = t_thres_us {
                let _ = write!(out, " t_thres_us={t}");
            }
        }
    }
    out.push('\n');
}

impl From<&Decision> for TraceEvent {
    fn from(d: &Decision) -> Self {
        TraceEvent::AdapterDecision {
            interval: d.stats.interval_index,
            loss_rate: d.stats.loss_rate,
            t_unit_us: d.stats.avg_loss_detection_time.as_micros() as u64,
            k_alpha: d.k_alpha,
            k_beta: d.k_beta,
            k_gamma: d.k_gamma,
            k_theta: d.k_theta,
            t_thres_us: d.t_thres.map(|t| t.as_micros() as u64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_is_stable() {
        let mut trace = Trace::new();
        trace.push(SimTime::ZERO, TraceEvent::ConnOpen);
        trace.push(
            SimTime::ZERO,
            TraceEvent::Send {
                attempt_id: AttemptId(0),
                data_id: DataId(0),
                bytes: 1300,
            },
        );
        trace.push(
            SimTime::from_micros(867),
            TraceEvent::Drop {
                attempt_id: AttemptId(0),
            },
        );
        trace.push(
            SimTime::from_micros(63_500),
            TraceEvent::Retransmit {
                attempt_id: AttemptId(1),
                data_id: DataId(0),
                bytes: 1300,
                t_unit_us: Some(63_500),
            },
        );
        assert_eq!(
            trace.to_text(),
            "0 conn_open\n\
             0 send attempt=0 data=0 bytes=1300\n\
             867 drop attempt=0\n\
             63500 retransmit attempt=1 data=0 bytes=1300 t_unit_us=63500\n"
        );
    }
}
