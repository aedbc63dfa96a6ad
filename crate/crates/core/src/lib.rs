//! Loss-recovery simulation library.
//!
//! Implements a deterministic discrete-event model of live-stream transport
//! over a lossy link, a baseline ARQ sender, and an adaptive redundancy
//! mechanism that reinjects replicas of lost packets during off-mode gaps and
//! opportunistically on a silence threshold. Post-hoc metrics and an
//! experiment harness reproduce formula-accuracy, parameter-sensitivity, and
//! ablation studies at desk scale.

pub mod adapter;
pub mod arq;
pub mod config;
pub mod experiment;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod reinjection;
pub mod rtt;
pub mod sim;
pub mod time;
pub mod trace;

pub use config::{ExperimentConfig, Mechanism};
pub use sim::{run, run_seeded, SimError};
pub use time::SimTime;
pub use trace::{Trace, TraceEvent};
