//! Acceptance suite. Each test exercises one release criterion end to end at
//! its stated tolerance and prints one PASS line (run with `--nocapture` to
//! see them; failures always show the measured numbers).
//!
//! The heavy tests replay minutes of simulated streaming per point; the whole
//! suite is sized for a few minutes of wall time on a laptop.

use std::time::Duration;

use lossrec::adapter::{
    decide_k_theta, f_recovery_latency, g_redundancy_cost, h_goodput_reduction, k_alpha, k_beta,
    k_gamma, IntervalStats, Tolerances,
};
use lossrec::config::{ExperimentConfig, Mechanism};
use lossrec::experiment::{
    run_ablation, run_experiment, run_experiment_cached, run_single, run_sweep, write_csv,
    BaselineCache, SweepAxis,
};
use lossrec::loss::LossModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn basic_env() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.link.bandwidth_mbps = 12.0;
    cfg.link.rtt_ms = 60.0;
    cfg.link.loss = LossModel::Bernoulli { rate: 0.05 };
    cfg.traffic.bitrate_mbps = 12.0;
    cfg.traffic.frame_rate = 60;
    cfg.traffic.duration_s = 60.0;
    cfg.seed = 1;
    cfg
}

/// Criterion 1: fixed-level formula accuracy. Measured recovery latency,
/// redundancy cost, and goodput reduction track F(K), G(K), H(K) over
/// K in 0..=6 under the all-on-mode setup, 100 runs of 60 s per level.
#[test]
fn criterion_1_formula_accuracy() {
    let mut cfg = basic_env();
    cfg.replications = 100;
    let cache = BaselineCache::new();

    let mut failures = Vec::new();
    let mut report = String::new();
    for k in 0..=6u32 {
        let mut c = cfg.clone();
        c.mechanism = Mechanism::FixedK(k);
        let agg = run_experiment_cached(&c, &cache).unwrap().aggregate;

        let f_pred = agg.f_pred_ms.unwrap();
        let measured_lat = agg.mean_recovery_latency_ms.unwrap();
        let lat_tol = 5.0_f64.max(0.15 * f_pred);
        if (measured_lat - f_pred).abs() > lat_tol {
            failures.push(format!(
                "K={k}: latency {measured_lat:.2} ms vs F(K) {f_pred:.2} ms exceeds ±{lat_tol:.2}"
            ));
        }

        let g_pred = agg.g_pred_frac.unwrap();
        let cost = agg.redundancy_cost_frac;
        if (cost - g_pred).abs() > 0.03 {
            failures.push(format!(
                "K={k}: cost {cost:.4} vs G(K) {g_pred:.4} exceeds ±0.03"
            ));
        }

        let h_pred = agg.h_pred_frac.unwrap();
        let reduction = agg.goodput_reduction_frac.unwrap();
        if (reduction - h_pred).abs() > 0.03 {
            failures.push(format!(
                "K={k}: reduction {reduction:.4} vs H(K) {h_pred:.4} exceeds ±0.03"
            ));
        }
        report.push_str(&format!(
            "K={k} F={f_pred:.2}/{measured_lat:.2}ms G={g_pred:.3}/{cost:.3} H={h_pred:.3}/{reduction:.3}; "
        ));
    }
    println!(
        "ACCEPTANCE 1 formula-accuracy: {} [{report}]",
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

/// Criterion 2: recovery-latency tolerance sensitivity. With the overhead
/// tolerances relaxed, measured latency stays within alpha + 5 ms for every
/// alpha >= 10 ms, and for alpha >= 100 ms the mechanism goes quiet.
#[test]
fn criterion_2_alpha_sensitivity() {
    let mut cfg = basic_env();
    cfg.adaptation.beta = 1.0;
    cfg.adaptation.gamma = 1.0;
    cfg.replications = 25;
    let sweep = run_sweep(
        &cfg,
        SweepAxis::Alpha,
        &[10.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0],
    )
    .unwrap();

    let mut failures = Vec::new();
    let mut report = String::new();
    for (alpha, agg) in sweep.aggregates() {
        let lat = agg.mean_recovery_latency_ms.unwrap();
        if lat > alpha + 5.0 {
            failures.push(format!(
                "alpha={alpha}: latency {lat:.2} ms exceeds {}",
                alpha + 5.0
            ));
        }
        if alpha >= 100.0 {
            let cost = agg.redundancy_cost_frac;
            let red = agg.goodput_reduction_frac.unwrap();
            if cost >= 0.02 {
                failures.push(format!("alpha={alpha}: cost {cost:.4} not < 2 pts"));
            }
            if red >= 0.02 {
                failures.push(format!("alpha={alpha}: reduction {red:.4} not < 2 pts"));
            }
        }
        report.push_str(&format!("a={alpha}:{lat:.1}ms "));
    }
    println!(
        "ACCEPTANCE 2 alpha-sensitivity: {} [{report}]",
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

/// Criterion 3: redundancy-cost and goodput-reduction tolerances are hard
/// caps: measured overhead never exceeds the tolerance by more than 1 point
/// at any sweep value.
#[test]
fn criterion_3_beta_gamma_hard_caps() {
    let values = [0.0, 0.05, 0.10, 0.20, 0.30, 0.50, 1.0];
    let mut failures = Vec::new();
    let mut report = String::new();

    let mut cfg = basic_env();
    cfg.adaptation.alpha_ms = 0.0;
    cfg.adaptation.gamma = 1.0;
    cfg.replications = 25;
    for (beta, agg) in run_sweep(&cfg, SweepAxis::Beta, &values)
        .unwrap()
        .aggregates()
    {
        let cost = agg.redundancy_cost_frac;
        if cost > beta + 0.01 {
            failures.push(format!(
                "beta={beta}: cost {cost:.4} exceeds cap {}",
                beta + 0.01
            ));
        }
        report.push_str(&format!("b={beta}:{cost:.3} "));
    }

    let mut cfg = basic_env();
    cfg.adaptation.alpha_ms = 0.0;
    cfg.adaptation.beta = 1.0;
    cfg.replications = 25;
    for (gamma, agg) in run_sweep(&cfg, SweepAxis::Gamma, &values)
        .unwrap()
        .aggregates()
    {
        let red = agg.goodput_reduction_frac.unwrap();
        if red > gamma + 0.01 {
            failures.push(format!(
                "gamma={gamma}: reduction {red:.4} exceeds cap {}",
                gamma + 0.01
            ));
        }
        report.push_str(&format!("g={gamma}:{red:.3} "));
    }

    println!(
        "ACCEPTANCE 3 beta/gamma-hard-caps: {} [{report}]",
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

/// Criterion 4: opportunistic-reinjection ablation, direction of effect.
/// Without off-mode (bandwidth <= bitrate) the no-opportunistic variant
/// cannot inject, while the full mechanism still recovers fast; with ample
/// off-mode both variants do well and the full one is never slower.
#[test]
fn criterion_4_opportunistic_ablation() {
    let mut cfg = basic_env();
    cfg.traffic.bitrate_mbps = 4.0;
    cfg.replications = 25;
    cfg.pair_baseline = false;
    let result = run_ablation(&cfg, &[2.0, 3.0, 4.0, 8.0, 10.0, 12.0]).unwrap();

    let mut failures = Vec::new();
    let mut report = String::new();
    for (bw, with, without) in &result.points {
        let w_lat = with.aggregate.mean_recovery_latency_ms.unwrap();
        let o_lat = without.aggregate.mean_recovery_latency_ms.unwrap();
        let w_det = with.aggregate.deterioration_rate_frac;
        let o_det = without.aggregate.deterioration_rate_frac;
        let o_cost = without.aggregate.redundancy_cost_frac;
        if *bw <= 4.0 {
            if o_cost >= 0.01 {
                failures.push(format!("bw={bw}: no-opp cost {o_cost:.4} not < 1 pt"));
            }
            if w_det >= 0.01 {
                failures.push(format!("bw={bw}: full deterioration {w_det:.4} not < 1%"));
            }
            if w_lat >= o_lat {
                failures.push(format!(
                    "bw={bw}: full latency {w_lat:.2} not strictly below no-opp {o_lat:.2}"
                ));
            }
        } else {
            if w_det >= 0.01 || o_det >= 0.01 {
                failures.push(format!(
                    "bw={bw}: deterioration with={w_det:.4} without={o_det:.4} not < 1%"
                ));
            }
            if w_lat > o_lat {
                failures.push(format!(
                    "bw={bw}: full latency {w_lat:.2} above no-opp {o_lat:.2}"
                ));
            }
        }
        report.push_str(&format!("bw={bw}:{w_lat:.1}/{o_lat:.1}ms "));
    }
    println!(
        "ACCEPTANCE 4 opportunistic-ablation: {} [{report}]",
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

/// Criterion 5: the binary-searched constraint levels equal an exhaustive
/// scan on 1000 random tuples, the combined level is their minimum, and a
/// loss-free interval forces level zero.
#[test]
fn criterion_5_adapter_oracle_equivalence() {
    const EPS: f64 = 1e-9;
    let scan_alpha = |r: f64, t: Duration, a: Duration, k_max: u32| {
        (0..=k_max)
            .find(|&k| f_recovery_latency(k, r, t).as_secs_f64() <= a.as_secs_f64() + EPS)
            .unwrap_or(k_max)
    };
    let scan_beta = |r: f64, b: f64, k_max: u32| {
        (0..=k_max)
            .rev()
            .find(|&k| g_redundancy_cost(k, r) <= b + EPS)
            .unwrap_or(0)
    };
    let scan_gamma = |r: f64, g: f64, k_max: u32| {
        (0..=k_max)
            .rev()
            .find(|&k| h_goodput_reduction(k, r) <= g + EPS)
            .unwrap_or(0)
    };

    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE);
    let mut checked = 0u32;
    for _ in 0..1000 {
        let r: f64 = rng.gen_range(0.0005..0.9995);
        let t_unit = Duration::from_secs_f64(rng.gen_range(0.0001..0.5));
        let alpha = Duration::from_secs_f64(rng.gen_range(0.0..0.5));
        let beta: f64 = rng.gen_range(0.0..1.0);
        let gamma: f64 = rng.gen_range(0.0..1.0);
        let k_max: u32 = rng.gen_range(0..=10);

        let ka = k_alpha(r, t_unit, alpha, k_max);
        let kb = k_beta(r, beta, k_max);
        let kg = k_gamma(r, gamma, k_max);
        assert_eq!(ka, scan_alpha(r, t_unit, alpha, k_max), "k_alpha at r={r}");
        assert_eq!(kb, scan_beta(r, beta, k_max), "k_beta at r={r}");
        assert_eq!(kg, scan_gamma(r, gamma, k_max), "k_gamma at r={r}");

        let stats = IntervalStats {
            loss_rate: r,
            avg_loss_detection_time: t_unit,
            packets_sent: 100,
            losses_detected: 1,
            interval_index: 0,
        };
        let tol = Tolerances { alpha, beta, gamma };
        assert_eq!(decide_k_theta(&stats, &tol, k_max), ka.min(kb).min(kg));

        let no_loss = IntervalStats {
            loss_rate: 0.0,
            ..stats
        };
        assert_eq!(decide_k_theta(&no_loss, &tol, k_max), 0);
        checked += 1;
    }
    println!("ACCEPTANCE 5 adapter-oracle-equivalence: PASS [{checked} tuples, 0 failures]");
}

/// Criterion 6: monotonicity of the three formulas over the full level range
/// on a 99-point loss-rate grid.
#[test]
fn criterion_6_formula_monotonicity() {
    let t_unit = Duration::from_millis(60);
    let mut checked = 0u32;
    for i in 1..100 {
        let r = i as f64 / 100.0;
        for k in 0..10 {
            assert!(
                f_recovery_latency(k + 1, r, t_unit) <= f_recovery_latency(k, r, t_unit),
                "F increased at R={r}, K={k}"
            );
            assert!(
                g_redundancy_cost(k + 1, r) > g_redundancy_cost(k, r),
                "G not strictly increasing at R={r}, K={k}"
            );
            assert!(
                h_goodput_reduction(k + 1, r) > h_goodput_reduction(k, r),
                "H not strictly increasing at R={r}, K={k}"
            );
            checked += 3;
        }
    }
    println!("ACCEPTANCE 6 formula-monotonicity: PASS [{checked} comparisons, 0 violations]");
}

/// Criterion 7: baseline sanity. Under Bernoulli loss p the plain ARQ's
/// deterioration rate is the first-retransmission loss probability, nothing
/// is ever reinjected, and every unit is eventually delivered.
#[test]
fn criterion_7_baseline_sanity() {
    let mut failures = Vec::new();
    let mut report = String::new();
    for p in [0.01, 0.05, 0.10] {
        let mut cfg = basic_env();
        cfg.traffic.bitrate_mbps = 4.0;
        cfg.link.loss = LossModel::Bernoulli { rate: p };
        cfg.mechanism = Mechanism::BaselineArq;
        cfg.replications = 20;
        let result = run_experiment(&cfg).unwrap();
        let det = result.aggregate.deterioration_rate_frac;
        if (det - p).abs() > 0.01 {
            failures.push(format!("p={p}: deterioration {det:.4} outside p ± 1 pt"));
        }
        for run in &result.runs {
            if run.reinjections_count != 0.0 {
                failures.push(format!("p={p}: baseline run reinjected"));
            }
            if run.delivered_all_bool != 1.0 {
                failures.push(format!(
                    "p={p}: seed {:?} failed eventual delivery",
                    run.seed
                ));
            }
        }
        report.push_str(&format!("p={p}:det={det:.4} "));
    }
    println!(
        "ACCEPTANCE 7 baseline-sanity: {} [{report}]",
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

/// Criterion 8: robustness under bursty Gilbert-Elliott loss. The adaptive
/// mechanism beats the baseline's deterioration rate at equal seeds, and the
/// measured long-run loss rate matches the stationary mixture. Player-level
/// numbers are reported as trends only.
#[test]
fn criterion_8_gilbert_elliott_robustness() {
    let mut cfg = basic_env();
    cfg.traffic.bitrate_mbps = 4.0;
    cfg.link.rtt_ms = 30.0;
    cfg.link.loss = LossModel::GilbertElliott {
        good_loss: 0.01,
        bad_loss: 0.10,
        p_good_to_bad: 0.2,
        p_bad_to_good: 0.8,
        state_step_ms: 30.0,
    };
    cfg.traffic.deadline_ms = Some(100.0);
    cfg.adaptation.alpha_ms = 0.0;
    cfg.adaptation.beta = 0.20;
    cfg.adaptation.gamma = 0.20;
    cfg.replications = 20;
    cfg.pair_baseline = false;
    let expected = cfg.link.loss.mean_loss_rate();

    let cache = BaselineCache::new();
    let mut adaptive = cfg.clone();
    adaptive.mechanism = Mechanism::Adaptive;
    let adaptive = run_experiment_cached(&adaptive, &cache).unwrap().aggregate;
    let mut baseline = cfg.clone();
    baseline.mechanism = Mechanism::BaselineArq;
    let baseline = run_experiment_cached(&baseline, &cache).unwrap().aggregate;

    let mut failures = Vec::new();
    if adaptive.deterioration_rate_frac >= baseline.deterioration_rate_frac {
        failures.push(format!(
            "deterioration: adaptive {:.4} not below baseline {:.4}",
            adaptive.deterioration_rate_frac, baseline.deterioration_rate_frac
        ));
    }
    for (label, rate) in [
        ("baseline", baseline.measured_loss_rate_frac),
        ("adaptive", adaptive.measured_loss_rate_frac),
    ] {
        if (rate - expected).abs() > 0.005 {
            failures.push(format!(
                "{label} measured loss {rate:.4} off stationary {expected:.4} by > 0.5 pt"
            ));
        }
    }
    println!(
        "ACCEPTANCE 8 gilbert-elliott: {} [det {:.4} vs {:.4}; loss {:.4}/{:.4} vs {:.4}; \
         trend freezes/100s {:.2} vs {:.2}, dmr {:.4} vs {:.4}, latency {:.1} vs {:.1} ms]",
        if failures.is_empty() { "PASS" } else { "FAIL" },
        adaptive.deterioration_rate_frac,
        baseline.deterioration_rate_frac,
        adaptive.measured_loss_rate_frac,
        baseline.measured_loss_rate_frac,
        expected,
        adaptive.freezes_per_100s_count,
        baseline.freezes_per_100s_count,
        adaptive.deadline_miss_rate_frac.unwrap_or(f64::NAN),
        baseline.deadline_miss_rate_frac.unwrap_or(f64::NAN),
        adaptive.mean_recovery_latency_ms.unwrap_or(f64::NAN),
        baseline.mean_recovery_latency_ms.unwrap_or(f64::NAN),
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

/// Criterion 9: any (config, seed) pair replays byte-identically, trace and
/// CSV both.
#[test]
fn criterion_9_determinism() {
    let mut cfg = basic_env();
    cfg.traffic.duration_s = 5.0;
    cfg.traffic.bitrate_mbps = 4.0;
    cfg.seed = 42;

    let a = run_single(&cfg, 42, None).unwrap();
    let b = run_single(&cfg, 42, None).unwrap();
    assert_eq!(
        a.trace.to_text(),
        b.trace.to_text(),
        "traces must replay identically"
    );
    assert_eq!(
        write_csv(std::slice::from_ref(&a.summary)),
        write_csv(std::slice::from_ref(&b.summary)),
        "CSV rows must replay identically"
    );

    let c = run_single(&cfg, 43, None).unwrap();
    assert_ne!(
        a.trace.to_text(),
        c.trace.to_text(),
        "different seeds must diverge"
    );
    println!(
        "ACCEPTANCE 9 determinism: PASS [trace {} bytes replayed twice]",
        a.trace.to_text().len()
    );
}
