//! Experiment harness: replicated runs, parameter sweeps, fixed-level formula
//! validation, and the opportunistic-reinjection ablation. Results are
//! emitted as CSV rows whose numeric column names carry their units.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::adapter::{f_recovery_latency, g_redundancy_cost, h_goodput_reduction};
use crate::config::{ExperimentConfig, Mechanism};
use crate::metrics::{self, run_metrics};
use crate::sim::{self, SimError};
use crate::trace::Trace;

/// One result row: either a single run or the mean over a replication set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub row_kind: String,
    pub mechanism: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub sweep_axis: Option<String>,
    pub sweep_value: Option<f64>,

    pub bandwidth_mbps: f64,
    pub rtt_ms: f64,
    pub loss_model: String,
    pub bitrate_mbps: f64,
    pub frame_rate_hz: f64,
    pub duration_s: f64,
    pub alpha_ms: f64,
    pub beta_frac: f64,
    pub gamma_frac: f64,
    pub k_max_level: f64,

    pub elapsed_s: f64,
    pub measured_loss_rate_frac: f64,
    pub initial_sends_count: f64,
    pub retransmissions_count: f64,
    pub reinjections_count: f64,
    pub lost_units_count: f64,
    pub mean_t_unit_ms: Option<f64>,
    pub mean_recovery_latency_ms: Option<f64>,
    pub mean_recovery_latency_all_ms: Option<f64>,
    pub max_recovery_latency_ms: Option<f64>,
    pub deterioration_rate_frac: f64,
    pub redundancy_cost_frac: f64,
    pub goodput_mbps: f64,
    pub delivered_all_bool: f64,
    pub goodput_reduction_frac: Option<f64>,
    pub goodput_reduction_raw_frac: Option<f64>,
    pub mean_k_theta_level: Option<f64>,
    pub freezes_per_100s_count: f64,
    pub freeze_per_100s_ms: f64,
    pub deadline_miss_rate_frac: Option<f64>,

    pub f_pred_ms: Option<f64>,
    pub g_pred_frac: Option<f64>,
    pub h_pred_frac: Option<f64>,
}

pub const CSV_HEADER: &str = "row_kind,mechanism,config_hash,seed,sweep_axis,sweep_value,\
bandwidth_mbps,rtt_ms,loss_model,bitrate_mbps,frame_rate_hz,duration_s,\
alpha_ms,beta_frac,gamma_frac,k_max_level,\
elapsed_s,measured_loss_rate_frac,initial_sends_count,retransmissions_count,\
reinjections_count,lost_units_count,mean_t_unit_ms,mean_recovery_latency_ms,\
mean_recovery_latency_all_ms,max_recovery_latency_ms,deterioration_rate_frac,\
redundancy_cost_frac,goodput_mbps,delivered_all_bool,goodput_reduction_frac,goodput_reduction_raw_frac,\
mean_k_theta_level,freezes_per_100s_count,freeze_per_100s_ms,deadline_miss_rate_frac,\
f_pred_ms,g_pred_frac,h_pred_frac";

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl RunSummary {
    pub fn csv_row(&self) -> String {
        let mut row = String::with_capacity(320);
        let _ = write!(
            row,
            "{},{},{},{},{},{}",
            self.row_kind,
            self.mechanism,
            self.config_hash,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.sweep_axis.clone().unwrap_or_default(),
            fmt_opt(self.sweep_value),
        );
        for v in [self.bandwidth_mbps, self.rtt_ms] {
            let _ = write!(row, ",{}", fmt_f64(v));
        }
        let _ = write!(row, ",{}", self.loss_model);
        for v in [
            self.bitrate_mbps,
            self.frame_rate_hz,
            self.duration_s,
            self.alpha_ms,
            self.beta_frac,
            self.gamma_frac,
            self.k_max_level,
            self.elapsed_s,
            self.measured_loss_rate_frac,
            self.initial_sends_count,
            self.retransmissions_count,
            self.reinjections_count,
            self.lost_units_count,
        ] {
            let _ = write!(row, ",{}", fmt_f64(v));
        }
        for v in [
            self.mean_t_unit_ms,
            self.mean_recovery_latency_ms,
            self.mean_recovery_latency_all_ms,
            self.max_recovery_latency_ms,
        ] {
            let _ = write!(row, ",{}", fmt_opt(v));
        }
        for v in [
            self.deterioration_rate_frac,
            self.redundancy_cost_frac,
            self.goodput_mbps,
            self.delivered_all_bool,
        ] {
            let _ = write!(row, ",{}", fmt_f64(v));
        }
        for v in [
            self.goodput_reduction_frac,
            self.goodput_reduction_raw_frac,
            self.mean_k_theta_level,
        ] {
            let _ = write!(row, ",{}", fmt_opt(v));
        }
        for v in [self.freezes_per_100s_count, self.freeze_per_100s_ms] {
            let _ = write!(row, ",{}", fmt_f64(v));
        }
        for v in [
            self.deadline_miss_rate_frac,
            self.f_pred_ms,
            self.g_pred_frac,
            self.h_pred_frac,
        ] {
            let _ = write!(row, ",{}", fmt_opt(v));
        }
        row
    }
}

/// Serializes rows as a JSON array, the detail form of the CSV summary.
pub fn write_json(rows: &[RunSummary]) -> String {
    let mut out = serde_json::to_string_pretty(rows).expect("rows serialize");
    out.push('\n');
    out
}

/// Serializes header plus rows; consumers parse this with any CSV reader.
pub fn write_csv(rows: &[RunSummary]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 320);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = DefaultHasher::new();
    json.hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

/// Memo of baseline goodputs keyed by (environment, seed), so paired-baseline
/// twins run once per seed even across sweep points that share the link and
/// traffic settings.
#[derive(Debug, Default)]
pub struct BaselineCache {
    map: Mutex<HashMap<(String, u64), f64>>,
}

impl BaselineCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn goodput(&self, config: &ExperimentConfig, seed: u64) -> Result<f64, SimError> {
        let key = (config.environment_key(), seed);
        if let Some(v) = self.map.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let mut baseline = config.clone();
        baseline.mechanism = Mechanism::BaselineArq;
        let trace = sim::run_seeded(&baseline, seed)?;
        let m = run_metrics(&trace, startup_buffer(config));
        let goodput = m.cost.goodput_bps;
        self.map.lock().unwrap().insert(key, goodput);
        Ok(goodput)
    }
}

fn startup_buffer(config: &ExperimentConfig) -> Duration {
    Duration::from_secs_f64(config.startup_buffer_ms / 1e3)
}

/// Result of one seeded run, with its trace for optional emission.
pub struct RunRecord {
    pub summary: RunSummary,
    pub trace: Trace,
}

/// Runs one seed of the configured experiment. When `cache` is provided and
/// the mechanism is not the baseline, a baseline twin at the same seed
/// supplies the goodput-reduction reference.
pub fn run_single(
    config: &ExperimentConfig,
    seed: u64,
    cache: Option<&BaselineCache>,
) -> Result<RunRecord, SimError> {
    let trace = sim::run_seeded(config, seed)?;
    let m = run_metrics(&trace, startup_buffer(config));

    let mut reduction = None;
    let mut reduction_raw = None;
    if config.pair_baseline && config.mechanism != Mechanism::BaselineArq {
        if let Some(cache) = cache {
            let base_goodput = cache.goodput(config, seed)?;
            let r = metrics::goodput_reduction(m.cost.goodput_bps, base_goodput);
            reduction = Some(r.reported);
            reduction_raw = Some(r.raw);
        }
    }

    let mean_loss = config.link.loss.mean_loss_rate();
    let (f_pred, g_pred, h_pred) = match config.mechanism {
        Mechanism::FixedK(k) if mean_loss > 0.0 && mean_loss < 1.0 => {
            let f = m
                .recovery
                .mean_t_unit
                .map(|t_unit| f_recovery_latency(k, mean_loss, t_unit).as_secs_f64() * 1e3);
            (
                f,
                Some(g_redundancy_cost(k, mean_loss)),
                Some(h_goodput_reduction(k, mean_loss)),
            )
        }
        _ => (None, None, None),
    };

    let to_ms = |d: Duration| d.as_secs_f64() * 1e3;
    let summary = RunSummary {
        row_kind: "run".into(),
        mechanism: config.mechanism.to_string(),
        config_hash: config_hash(config),
        seed: Some(seed),
        sweep_axis: None,
        sweep_value: None,
        bandwidth_mbps: config.link.bandwidth_mbps,
        rtt_ms: config.link.rtt_ms,
        loss_model: config.link.loss.describe(),
        bitrate_mbps: config.traffic.bitrate_mbps,
        frame_rate_hz: config.traffic.frame_rate as f64,
        duration_s: config.traffic.duration_s,
        alpha_ms: config.adaptation.alpha_ms,
        beta_frac: config.adaptation.beta,
        gamma_frac: config.adaptation.gamma,
        k_max_level: config.adaptation.k_max as f64,
        elapsed_s: m.close_time.as_secs_f64(),
        measured_loss_rate_frac: m.cost.measured_loss_rate,
        initial_sends_count: m.cost.initial_sends as f64,
        retransmissions_count: m.cost.retransmissions as f64,
        reinjections_count: m.cost.reinjections as f64,
        lost_units_count: m.recovery.lost_units as f64,
        mean_t_unit_ms: m.recovery.mean_t_unit.map(to_ms),
        mean_recovery_latency_ms: m.recovery.mean_recovery_latency.map(to_ms),
        mean_recovery_latency_all_ms: m.recovery.mean_recovery_latency_all.map(to_ms),
        max_recovery_latency_ms: m.recovery.max_recovery_latency.map(to_ms),
        deterioration_rate_frac: m.recovery.deterioration_rate,
        redundancy_cost_frac: m.cost.redundancy_cost,
        goodput_mbps: m.cost.goodput_bps / 1e6,
        delivered_all_bool: if m.cost.delivered_all { 1.0 } else { 0.0 },
        goodput_reduction_frac: reduction,
        goodput_reduction_raw_frac: reduction_raw,
        mean_k_theta_level: m.mean_k_theta,
        freezes_per_100s_count: m.qoe.freezes_per_100s,
        freeze_per_100s_ms: m.qoe.freeze_ms_per_100s,
        deadline_miss_rate_frac: m.qoe.deadline_miss_rate,
        f_pred_ms: f_pred,
        g_pred_frac: g_pred,
        h_pred_frac: h_pred,
    };
    Ok(RunRecord { summary, trace })
}

/// Column-wise mean over run rows; optional columns average present values.
pub fn aggregate(rows: &[RunSummary]) -> RunSummary {
    assert!(!rows.is_empty(), "cannot aggregate zero rows");
    let mut agg = rows[0].clone();
    agg.row_kind = "mean".into();
    agg.seed = None;

    fn mean(rows: &[RunSummary], f: impl Fn(&RunSummary) -> f64) -> f64 {
        rows.iter().map(f).sum::<f64>() / rows.len() as f64
    }
    fn mean_opt(rows: &[RunSummary], f: impl Fn(&RunSummary) -> Option<f64>) -> Option<f64> {
        let values: Vec<f64> = rows.iter().filter_map(f).collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    agg.elapsed_s = mean(rows, |r| r.elapsed_s);
    agg.measured_loss_rate_frac = mean(rows, |r| r.measured_loss_rate_frac);
    agg.initial_sends_count = mean(rows, |r| r.initial_sends_count);
    agg.retransmissions_count = mean(rows, |r| r.retransmissions_count);
    agg.reinjections_count = mean(rows, |r| r.reinjections_count);
    agg.lost_units_count = mean(rows, |r| r.lost_units_count);
    agg.mean_t_unit_ms = mean_opt(rows, |r| r.mean_t_unit_ms);
    agg.mean_recovery_latency_ms = mean_opt(rows, |r| r.mean_recovery_latency_ms);
    agg.mean_recovery_latency_all_ms = mean_opt(rows, |r| r.mean_recovery_latency_all_ms);
    agg.max_recovery_latency_ms = mean_opt(rows, |r| r.max_recovery_latency_ms);
    agg.deterioration_rate_frac = mean(rows, |r| r.deterioration_rate_frac);
    agg.redundancy_cost_frac = mean(rows, |r| r.redundancy_cost_frac);
    agg.goodput_mbps = mean(rows, |r| r.goodput_mbps);
    agg.delivered_all_bool = mean(rows, |r| r.delivered_all_bool);
    agg.goodput_reduction_frac = mean_opt(rows, |r| r.goodput_reduction_frac);
    agg.goodput_reduction_raw_frac = mean_opt(rows, |r| r.goodput_reduction_raw_frac);
    agg.mean_k_theta_level = mean_opt(rows, |r| r.mean_k_theta_level);
    agg.freezes_per_100s_count = mean(rows, |r| r.freezes_per_100s_count);
    agg.freeze_per_100s_ms = mean(rows, |r| r.freeze_per_100s_ms);
    agg.deadline_miss_rate_frac = mean_opt(rows, |r| r.deadline_miss_rate_frac);
    agg.f_pred_ms = mean_opt(rows, |r| r.f_pred_ms);
    agg.g_pred_frac = mean_opt(rows, |r| r.g_pred_frac);
    agg.h_pred_frac = mean_opt(rows, |r| r.h_pred_frac);
    agg
}

pub struct ExperimentResult {
    pub runs: Vec<RunSummary>,
    pub aggregate: RunSummary,
}

/// Runs `config.replications` seeds (config.seed, config.seed + 1, ...) in
/// parallel and aggregates. Rows come back in seed order regardless of which
/// worker finished first.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    run_experiment_cached(config, &BaselineCache::new())
}

pub fn run_experiment_cached(
    config: &ExperimentConfig,
    cache: &BaselineCache,
) -> Result<ExperimentResult, SimError> {
    config.validate().map_err(SimError::InvalidConfig)?;
    let seeds: Vec<u64> = (0..config.replications as u64)
        .map(|i| config.seed + i)
        .collect();
    let runs: Result<Vec<RunSummary>, SimError> = seeds
        .par_iter()
        .map(|&seed| run_single(config, seed, Some(cache)).map(|r| r.summary))
        .collect();
    let runs = runs?;
    let aggregate = aggregate(&runs);
    Ok(ExperimentResult { runs, aggregate })
}

/// Sweepable experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Beta,
    Gamma,
    BandwidthMbps,
    RttMs,
    LossRate,
    FixedK,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha_ms",
            SweepAxis::Beta => "beta_frac",
            SweepAxis::Gamma => "gamma_frac",
            SweepAxis::BandwidthMbps => "bandwidth_mbps",
            SweepAxis::RttMs => "rtt_ms",
            SweepAxis::LossRate => "loss_rate_frac",
            SweepAxis::FixedK => "k_level",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "beta" => Ok(SweepAxis::Beta),
            "gamma" => Ok(SweepAxis::Gamma),
            "bandwidth" => Ok(SweepAxis::BandwidthMbps),
            "rtt" => Ok(SweepAxis::RttMs),
            "loss-rate" | "loss" => Ok(SweepAxis::LossRate),
            "k" => Ok(SweepAxis::FixedK),
            other => Err(format!(
                "unknown sweep axis {other:?}; expected alpha, beta, gamma, bandwidth, \
                 rtt, loss-rate, or k"
            )),
        }
    }
}

/// Applies one sweep value onto a config.
pub fn apply_axis(
    config: &mut ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<(), String> {
    match axis {
        SweepAxis::Alpha => config.adaptation.alpha_ms = value,
        SweepAxis::Beta => config.adaptation.beta = value,
        SweepAxis::Gamma => config.adaptation.gamma = value,
        SweepAxis::BandwidthMbps => config.link.bandwidth_mbps = value,
        SweepAxis::RttMs => config.link.rtt_ms = value,
        SweepAxis::LossRate => {
            config.link.loss = crate::loss::LossModel::Bernoulli { rate: value };
        }
        SweepAxis::FixedK => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(format!(
                    "k sweep values must be non-negative integers, got {value}"
                ));
            }
            config.mechanism = Mechanism::FixedK(value as u32);
        }
    }
    Ok(())
}

pub struct SweepResult {
    /// (axis value, replicated result) in the order given.
    pub points: Vec<(f64, ExperimentResult)>,
    pub axis: SweepAxis,
}

impl SweepResult {
    /// Flattens to CSV rows: per-run rows then the aggregate row per point.
    pub fn rows(&self) -> Vec<RunSummary> {
        let mut rows = Vec::new();
        for (value, result) in &self.points {
            for run in &result.runs {
                let mut run = run.clone();
                run.sweep_axis = Some(self.axis.name().into());
                run.sweep_value = Some(*value);
                rows.push(run);
            }
            let mut agg = result.aggregate.clone();
            agg.sweep_axis = Some(self.axis.name().into());
            agg.sweep_value = Some(*value);
            rows.push(agg);
        }
        rows
    }

    pub fn aggregates(&self) -> Vec<(f64, &RunSummary)> {
        self.points
            .iter()
            .map(|(v, r)| (*v, &r.aggregate))
            .collect()
    }
}

/// One aggregate row per axis value. Baseline twins are shared across points
/// whose environment is unchanged by the axis.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepResult, SimError> {
    if values.is_empty() {
        return Err(SimError::InvalidConfig(
            "sweep needs at least one axis value".into(),
        ));
    }
    let cache = BaselineCache::new();
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut config = base.clone();
        apply_axis(&mut config, axis, value).map_err(SimError::InvalidConfig)?;
        let result = run_experiment_cached(&config, &cache)?;
        points.push((value, result));
    }
    Ok(SweepResult { points, axis })
}

/// Fixed-level formula validation: runs FixedK for each level and reports the
/// measured metrics next to the F/G/H predictions.
pub fn validate_formulas(base: &ExperimentConfig, levels: &[u32]) -> Result<SweepResult, SimError> {
    let values: Vec<f64> = levels.iter().map(|&k| k as f64).collect();
    run_sweep(base, SweepAxis::FixedK, &values)
}

pub struct AblationResult {
    /// (bandwidth, with-opportunistic, without-opportunistic)
    pub points: Vec<(f64, ExperimentResult, ExperimentResult)>,
}

impl AblationResult {
    pub fn rows(&self) -> Vec<RunSummary> {
        let mut rows = Vec::new();
        for (bw, with, without) in &self.points {
            for result in [with, without] {
                for run in &result.runs {
                    let mut run = run.clone();
                    run.sweep_axis = Some("bandwidth_mbps".into());
                    run.sweep_value = Some(*bw);
                    rows.push(run);
                }
                let mut agg = result.aggregate.clone();
                agg.sweep_axis = Some("bandwidth_mbps".into());
                agg.sweep_value = Some(*bw);
                rows.push(agg);
            }
        }
        rows
    }
}

/// Opportunistic-reinjection ablation over a bandwidth range: full mechanism
/// versus the variant without the opportunistic trigger at identical seeds.
pub fn run_ablation(
    base: &ExperimentConfig,
    bandwidths_mbps: &[f64],
) -> Result<AblationResult, SimError> {
    if bandwidths_mbps.is_empty() {
        return Err(SimError::InvalidConfig(
            "ablation needs at least one bandwidth".into(),
        ));
    }
    let cache = BaselineCache::new();
    let mut points = Vec::with_capacity(bandwidths_mbps.len());
    for &bw in bandwidths_mbps {
        let mut with = base.clone();
        with.link.bandwidth_mbps = bw;
        with.mechanism = Mechanism::Adaptive;
        let mut without = with.clone();
        without.mechanism = Mechanism::AdaptiveNoOpportunistic;
        points.push((
            bw,
            run_experiment_cached(&with, &cache)?,
            run_experiment_cached(&without, &cache)?,
        ));
    }
    Ok(AblationResult { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossModel;

    fn quick_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.traffic.duration_s = 2.0;
        cfg.replications = 2;
        cfg
    }

    #[test]
    fn replications_produce_per_seed_rows_in_order() {
        let cfg = quick_config();
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.runs.len(), 2);
        assert_eq!(result.runs[0].seed, Some(1));
        assert_eq!(result.runs[1].seed, Some(2));
        assert_eq!(result.aggregate.row_kind, "mean");
        assert_eq!(result.aggregate.seed, None);
        // Paired baselines ran: reduction column is populated.
        assert!(result.runs[0].goodput_reduction_frac.is_some());
    }

    #[test]
    fn csv_column_count_matches_header() {
        let cfg = quick_config();
        let result = run_experiment(&cfg).unwrap();
        let header_cols = CSV_HEADER.split(',').count();
        for row in result.runs.iter().chain([&result.aggregate]) {
            assert_eq!(row.csv_row().split(',').count(), header_cols);
        }
    }

    #[test]
    fn identical_config_and_seed_gives_identical_rows() {
        let cfg = quick_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(write_csv(&a.runs), write_csv(&b.runs));
    }

    #[test]
    fn sweep_produces_one_aggregate_per_value() {
        let mut cfg = quick_config();
        cfg.replications = 1;
        cfg.pair_baseline = false;
        let sweep = run_sweep(&cfg, SweepAxis::Alpha, &[10.0, 50.0]).unwrap();
        let aggs = sweep.aggregates();
        assert_eq!(aggs.len(), 2);
        assert_eq!(aggs[0].0, 10.0);
        assert_eq!(aggs[1].1.row_kind, "mean");
        assert!(sweep
            .rows()
            .iter()
            .all(|r| r.sweep_axis.as_deref() == Some("alpha_ms")));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let cfg = quick_config();
        assert!(matches!(
            run_sweep(&cfg, SweepAxis::FixedK, &[]),
            Err(SimError::InvalidConfig(_))
        ));
    }

    #[test]
    fn fixed_k_rows_carry_formula_predictions() {
        let mut cfg = quick_config();
        cfg.mechanism = Mechanism::FixedK(2);
        cfg.replications = 1;
        cfg.traffic.bitrate_mbps = 12.0;
        let result = run_experiment(&cfg).unwrap();
        let row = &result.aggregate;
        assert!(row.f_pred_ms.is_some());
        assert!((row.g_pred_frac.unwrap() - 0.10).abs() < 1e-12);
        assert!(row.h_pred_frac.is_some());
    }

    #[test]
    fn unknown_axis_is_an_error() {
        assert!("jitter".parse::<SweepAxis>().is_err());
        assert_eq!("loss".parse::<SweepAxis>().unwrap(), SweepAxis::LossRate);
    }

    #[test]
    fn baseline_runs_skip_pairing() {
        let mut cfg = quick_config();
        cfg.mechanism = Mechanism::BaselineArq;
        cfg.replications = 1;
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.runs[0].goodput_reduction_frac, None);
        assert_eq!(result.runs[0].reinjections_count, 0.0);
    }

    #[test]
    fn ge_loss_model_flows_through() {
        let mut cfg = quick_config();
        cfg.replications = 1;
        cfg.pair_baseline = false;
        cfg.link.loss = LossModel::GilbertElliott {
            good_loss: 0.01,
            bad_loss: 0.1,
            p_good_to_bad: 0.2,
            p_bad_to_good: 0.8,
            state_step_ms: 30.0,
        };
        let result = run_experiment(&cfg).unwrap();
        assert!(result.aggregate.loss_model.starts_with("ge("));
    }
}
