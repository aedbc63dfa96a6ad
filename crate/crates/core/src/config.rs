//! Experiment configuration: link, traffic, adaptation parameters, and the
//! recovery mechanism under test. Defaults mirror the basic testbed
//! environment (5% loss, 60 ms RTT, 12 Mbps bandwidth; alpha 30 ms,
//! beta 30%, gamma 20%).

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::adapter::Tolerances;
use crate::loss::LossModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub bandwidth_mbps: f64,
    /// Round-trip propagation time; each direction gets half.
    pub rtt_ms: f64,
    pub loss: LossModel,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            bandwidth_mbps: 12.0,
            rtt_ms: 60.0,
            loss: LossModel::Bernoulli { rate: 0.05 },
        }
    }
}

impl LinkConfig {
    pub fn bandwidth_bps(&self) -> u64 {
        (self.bandwidth_mbps * 1e6).round() as u64
    }

    pub fn one_way_delay(&self) -> Duration {
        Duration::from_micros((self.rtt_ms * 1e3 / 2.0).round() as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    pub bitrate_mbps: f64,
    pub frame_rate: u32,
    pub duration_s: f64,
    /// Playback deadline per frame; deadline accounting is off when absent.
    pub deadline_ms: Option<f64>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            bitrate_mbps: 4.0,
            frame_rate: 60,
            duration_s: 60.0,
            deadline_ms: None,
        }
    }
}

impl TrafficConfig {
    /// Application bytes per frame: bitrate / frame rate, floored to whole
    /// bytes.
    pub fn frame_bytes(&self) -> u64 {
        (self.bitrate_mbps * 1e6 / (8.0 * self.frame_rate as f64)).floor() as u64
    }

    pub fn total_frames(&self) -> u64 {
        (self.duration_s * self.frame_rate as f64).round() as u64
    }

    pub fn frame_tick(&self, index: u64) -> u64 {
        (index as u128 * 1_000_000 / self.frame_rate as u128) as u64
    }

    pub fn deadline(&self) -> Option<Duration> {
        self.deadline_ms.map(|ms| Duration::from_secs_f64(ms / 1e3))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptationConfig {
    pub alpha_ms: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k_max: u32,
    /// Decision interval length in units of SRTT.
    pub decision_interval_rtts: u32,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            alpha_ms: 30.0,
            beta: 0.30,
            gamma: 0.20,
            k_max: 10,
            decision_interval_rtts: 5,
        }
    }
}

impl AdaptationConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            alpha: Duration::from_secs_f64(self.alpha_ms / 1e3),
            beta: self.beta,
            gamma: self.gamma,
        }
    }
}

/// Recovery mechanism run by the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// Plain ARQ: one retransmission per loss detection, no replicas.
    BaselineArq,
    /// Adaptive redundancy with both off-mode and opportunistic reinjection.
    Adaptive,
    /// Adaptive redundancy with the opportunistic trigger disabled.
    AdaptiveNoOpportunistic,
    /// Redundancy level pinned for formula validation.
    FixedK(u32),
}

impl Mechanism {
    pub fn reinjects(self) -> bool {
        !matches!(self, Mechanism::BaselineArq)
    }

    pub fn opportunistic(self) -> bool {
        matches!(self, Mechanism::Adaptive | Mechanism::FixedK(_))
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mechanism::BaselineArq => write!(f, "baseline"),
            Mechanism::Adaptive => write!(f, "adaptive"),
            Mechanism::AdaptiveNoOpportunistic => write!(f, "adaptive-no-opportunistic"),
            Mechanism::FixedK(k) => write!(f, "fixed-k:{k}"),
        }
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" | "baseline-arq" => Ok(Mechanism::BaselineArq),
            "adaptive" => Ok(Mechanism::Adaptive),
            "adaptive-no-opportunistic" | "adaptive-no-opp" => {
                Ok(Mechanism::AdaptiveNoOpportunistic)
            }
            other => {
                if let Some(k) = other.strip_prefix("fixed-k:") {
                    let k = k
                        .parse::<u32>()
                        .map_err(|e| format!("bad fixed-k level {k:?}: {e}"))?;
                    Ok(Mechanism::FixedK(k))
                } else {
                    Err(format!(
                        "unknown mechanism {other:?}; expected baseline, adaptive, \
                         adaptive-no-opportunistic, or fixed-k:<K>"
                    ))
                }
            }
        }
    }
}

impl Serialize for Mechanism {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Mechanism {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub link: LinkConfig,
    pub traffic: TrafficConfig,
    pub adaptation: AdaptationConfig,
    pub mechanism: Mechanism,
    pub seed: u64,
    pub replications: u32,
    /// Player model: media buffered before playout starts.
    pub startup_buffer_ms: f64,
    /// Run a baseline twin at each seed to report goodput reduction.
    pub pair_baseline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            link: LinkConfig::default(),
            traffic: TrafficConfig::default(),
            adaptation: AdaptationConfig::default(),
            mechanism: Mechanism::Adaptive,
            seed: 1,
            replications: 1,
            startup_buffer_ms: 1000.0,
            pair_baseline: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.link.bandwidth_mbps <= 0.0 {
            return Err(format!(
                "link.bandwidth_mbps must be positive, got {}",
                self.link.bandwidth_mbps
            ));
        }
        if self.link.rtt_ms < 0.0 {
            return Err(format!(
                "link.rtt_ms must be >= 0, got {}",
                self.link.rtt_ms
            ));
        }
        self.link
            .loss
            .validate()
            .map_err(|e| format!("link.loss: {e}"))?;
        if self.traffic.bitrate_mbps < 0.0 {
            return Err(format!(
                "traffic.bitrate_mbps must be >= 0, got {}",
                self.traffic.bitrate_mbps
            ));
        }
        if self.traffic.frame_rate == 0 {
            return Err("traffic.frame_rate must be positive".into());
        }
        if self.traffic.duration_s < 0.0 {
            return Err(format!(
                "traffic.duration_s must be >= 0, got {}",
                self.traffic.duration_s
            ));
        }
        if let Some(d) = self.traffic.deadline_ms {
            if d <= 0.0 {
                return Err(format!("traffic.deadline_ms must be positive, got {d}"));
            }
        }
        if self.adaptation.alpha_ms < 0.0 {
            return Err(format!(
                "adaptation.alpha_ms must be >= 0, got {}",
                self.adaptation.alpha_ms
            ));
        }
        self.adaptation
            .tolerances()
            .validate()
            .map_err(|e| format!("adaptation: {e}"))?;
        if self.adaptation.decision_interval_rtts == 0 {
            return Err("adaptation.decision_interval_rtts must be positive".into());
        }
        if let Mechanism::FixedK(k) = self.mechanism {
            if k > self.adaptation.k_max {
                return Err(format!(
                    "mechanism fixed-k:{k} exceeds adaptation.k_max {}",
                    self.adaptation.k_max
                ));
            }
        }
        if self.replications == 0 {
            return Err("replications must be >= 1".into());
        }
        if self.startup_buffer_ms < 0.0 {
            return Err(format!(
                "startup_buffer_ms must be >= 0, got {}",
                self.startup_buffer_ms
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable identifier for the environment (link + traffic): runs are
    /// comparable for paired goodput only when this key and the seed match.
    pub fn environment_key(&self) -> String {
        let link = serde_json::to_string(&self.link).expect("link serializes");
        let traffic = serde_json::to_string(&self.traffic).expect("traffic serializes");
        format!("{link}|{traffic}")
    }
}
