//! Packet loss models for the data direction of the link.

use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Drop process applied to data packets. The ACK direction is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossModel {
    /// Independent per-packet drops with a fixed probability.
    Bernoulli { rate: f64 },
    /// Two-state Markov chain stepping on a fixed time lattice, with a
    /// per-packet drop probability set by the current state.
    GilbertElliott {
        good_loss: f64,
        bad_loss: f64,
        p_good_to_bad: f64,
        p_bad_to_good: f64,
        state_step_ms: f64,
    },
}

impl LossModel {
    pub fn validate(&self) -> Result<(), String> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} must be in [0, 1], got {v}"))
            }
        };
        match *self {
            LossModel::Bernoulli { rate } => frac("loss rate", rate),
            LossModel::GilbertElliott {
                good_loss,
                bad_loss,
                p_good_to_bad,
                p_bad_to_good,
                state_step_ms,
            } => {
                frac("good_loss", good_loss)?;
                frac("bad_loss", bad_loss)?;
                frac("p_good_to_bad", p_good_to_bad)?;
                frac("p_bad_to_good", p_bad_to_good)?;
                if state_step_ms <= 0.0 {
                    return Err(format!(
                        "state_step_ms must be positive, got {state_step_ms}"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Long-run expected loss rate: the configured rate for Bernoulli, the
    /// stationary two-state mixture for Gilbert-Elliott.
    pub fn mean_loss_rate(&self) -> f64 {
        match *self {
            LossModel::Bernoulli { rate } => rate,
            LossModel::GilbertElliott {
                good_loss,
                bad_loss,
                p_good_to_bad,
                p_bad_to_good,
                ..
            } => {
                let denom = p_good_to_bad + p_bad_to_good;
                if denom == 0.0 {
                    // No transitions ever happen; the chain stays in the
                    // good state it starts in.
                    good_loss
                } else {
                    let bad_frac = p_good_to_bad / denom;
                    (1.0 - bad_frac) * good_loss + bad_frac * bad_loss
                }
            }
        }
    }

    /// Compact descriptor, free of commas so it can sit in a CSV field.
    pub fn describe(&self) -> String {
        match *self {
            LossModel::Bernoulli { rate } => format!("bernoulli({rate})"),
            LossModel::GilbertElliott {
                good_loss,
                bad_loss,
                p_good_to_bad,
                p_bad_to_good,
                state_step_ms,
            } => format!(
                "ge(g={good_loss};b={bad_loss};gb={p_good_to_bad};bg={p_bad_to_good};step={state_step_ms}ms)"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChannelState {
    Good,
    Bad,
}

/// Stateful drop decider fed by its own RNG stream so that loss draws are
/// independent of any other randomness in a run.
#[derive(Debug, Clone)]
pub struct LossProcess {
    model: LossModel,
    rng: ChaCha12Rng,
    state: ChannelState,
    steps_taken: u64,
    step: Duration,
}

impl LossProcess {
    pub fn new(model: LossModel, rng: ChaCha12Rng) -> Self {
        let step = match model {
            LossModel::GilbertElliott { state_step_ms, .. } => {
                Duration::from_secs_f64(state_step_ms / 1e3)
            }
            _ => Duration::ZERO,
        };
        LossProcess {
            model,
            rng,
            state: ChannelState::Good,
            steps_taken: 0,
            step,
        }
    }

    /// Decides the fate of a packet sent at `now`.
    pub fn should_drop(&mut self, now: SimTime) -> bool {
        match self.model {
            LossModel::Bernoulli { rate } => self.rng.gen_bool(rate),
            LossModel::GilbertElliott {
                good_loss,
                bad_loss,
                p_good_to_bad,
                p_bad_to_good,
                ..
            } => {
                let due_steps = now.as_micros() / self.step.as_micros() as u64;
                while self.steps_taken < due_steps {
                    let p = match self.state {
                        ChannelState::Good => p_good_to_bad,
                        ChannelState::Bad => p_bad_to_good,
                    };
                    if self.rng.gen_bool(p) {
                        self.state = match self.state {
                            ChannelState::Good => ChannelState::Bad,
                            ChannelState::Bad => ChannelState::Good,
                        };
                    }
                    self.steps_taken += 1;
                }
                let p = match self.state {
                    ChannelState::Good => good_loss,
                    ChannelState::Bad => bad_loss,
                };
                self.rng.gen_bool(p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn process(model: LossModel, seed: u64) -> LossProcess {
        LossProcess::new(model, ChaCha12Rng::seed_from_u64(seed))
    }

    #[test]
    fn bernoulli_extremes() {
        let mut p = process(LossModel::Bernoulli { rate: 1.0 }, 1);
        assert!((0..100).all(|i| p.should_drop(SimTime::from_micros(i))));
        let mut p = process(LossModel::Bernoulli { rate: 0.0 }, 1);
        assert!((0..100).all(|i| !p.should_drop(SimTime::from_micros(i))));
    }

    #[test]
    fn bernoulli_long_run_rate() {
        let mut p = process(LossModel::Bernoulli { rate: 0.05 }, 42);
        let n = 1_000_000;
        let drops = (0..n)
            .filter(|&i| p.should_drop(SimTime::from_micros(i)))
            .count();
        let rate = drops as f64 / n as f64;
        assert!((rate - 0.05).abs() < 0.002, "rate was {rate}");
    }

    #[test]
    fn ge_stationary_mixture() {
        let model = LossModel::GilbertElliott {
            good_loss: 0.01,
            bad_loss: 0.40,
            p_good_to_bad: 0.2,
            p_bad_to_good: 0.8,
            state_step_ms: 30.0,
        };
        // 0.8 * 1% + 0.2 * 40% = 8.8%
        assert!((model.mean_loss_rate() - 0.088).abs() < 1e-12);

        let mut p = process(model, 7);
        // One packet every 300 us: a million packets spanning ten thousand
        // 30 ms lattice steps, enough to wash out state-mix noise.
        let n: u64 = 1_000_000;
        let mut drops = 0u64;
        for i in 0..n {
            if p.should_drop(SimTime::from_micros(i * 300)) {
                drops += 1;
            }
        }
        let rate = drops as f64 / n as f64;
        assert!((rate - 0.088).abs() < 0.005, "rate was {rate}");
    }

    #[test]
    fn same_seed_same_draws() {
        let model = LossModel::GilbertElliott {
            good_loss: 0.01,
            bad_loss: 0.4,
            p_good_to_bad: 0.2,
            p_bad_to_good: 0.8,
            state_step_ms: 30.0,
        };
        let mut a = process(model.clone(), 5);
        let mut b = process(model, 5);
        for i in 0..10_000u64 {
            let t = SimTime::from_micros(i * 137);
            assert_eq!(a.should_drop(t), b.should_drop(t));
        }
    }

    #[test]
    fn validation_rejects_bad_fractions() {
        assert!(LossModel::Bernoulli { rate: 1.5 }.validate().is_err());
        assert!(LossModel::GilbertElliott {
            good_loss: 0.01,
            bad_loss: 0.4,
            p_good_to_bad: 0.2,
            p_bad_to_good: 0.8,
            state_step_ms: 0.0,
        }
        .validate()
        .is_err());
    }
}
