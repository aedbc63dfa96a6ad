//! Experiment harness CLI: single runs, parameter sweeps, fixed-level formula
//! validation, and the opportunistic-reinjection ablation. Results land in
//! `<out-dir>/results.csv`; traces are emitted on request.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lossrec::config::{ExperimentConfig, Mechanism};
use lossrec::experiment::{
    aggregate, run_ablation, run_single, run_sweep, validate_formulas, write_csv, write_json,
    BaselineCache, RunSummary, SweepAxis,
};

#[derive(Parser)]
#[command(
    name = "lossrec",
    about = "Deterministic loss-recovery simulator with adaptive redundant reinjection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config file; defaults mirror the basic testbed environment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; replications use seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications per configuration point.
    #[arg(long)]
    reps: Option<u32>,
    /// Output directory for results.csv and optional traces.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Recovery mechanism: baseline, adaptive, adaptive-no-opportunistic,
    /// or fixed-k:<K>.
    #[arg(long)]
    mechanism: Option<Mechanism>,
    /// Also write one trace file per run (trace_seed<N>.log).
    #[arg(long)]
    emit_traces: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (with replications) and write per-run plus
    /// aggregate CSV rows.
    Run(CommonArgs),
    /// Sweep one parameter over a list of values.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis: alpha, beta, gamma, bandwidth, rtt, loss-rate, or k.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Pin the redundancy level to each value in a range and report measured
    /// metrics next to the F/G/H predictions.
    ValidateFormulas {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated redundancy levels.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6")]
        levels: Vec<u32>,
    },
    /// Compare the full mechanism against the no-opportunistic variant over a
    /// bandwidth range.
    Ablation {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated bandwidths in Mbps.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,8,10,12")]
        bandwidths: Vec<f64>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(common) => cmd_run(&common),
        Command::Sweep {
            common,
            axis,
            values,
        } => cmd_sweep(&common, &axis, &values),
        Command::ValidateFormulas { common, levels } => cmd_validate(&common, &levels),
        Command::Ablation { common, bandwidths } => cmd_ablation(&common, &bandwidths),
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_toml_str(&text)
                .map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.replications = reps;
    }
    if let Some(mechanism) = common.mechanism {
        cfg.mechanism = mechanism;
    }
    cfg.validate().map_err(|e| anyhow::anyhow!("config: {e}"))?;
    Ok(cfg)
}

fn write_results(out_dir: &Path, rows: &[RunSummary]) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let path = out_dir.join("results.csv");
    fs::write(&path, write_csv(rows)).with_context(|| format!("writing {}", path.display()))?;
    let json = out_dir.join("results.json");
    fs::write(&json, write_json(rows)).with_context(|| format!("writing {}", json.display()))?;
    Ok(path)
}

fn print_aggregate(label: &str, agg: &RunSummary) {
    println!(
        "{label}: latency {} ms (all {}), deterioration {:.4}, cost {:.4}, \
         goodput {:.3} Mbps, reduction {}, mean K {}",
        agg.mean_recovery_latency_ms
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into()),
        agg.mean_recovery_latency_all_ms
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into()),
        agg.deterioration_rate_frac,
        agg.redundancy_cost_frac,
        agg.goodput_mbps,
        agg.goodput_reduction_frac
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into()),
        agg.mean_k_theta_level
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into()),
    );
}

fn cmd_run(common: &CommonArgs) -> Result<()> {
    let cfg = load_config(common)?;
    let cache = BaselineCache::new();
    let mut rows = Vec::new();
    for i in 0..cfg.replications as u64 {
        let seed = cfg.seed + i;
        let record = run_single(&cfg, seed, Some(&cache))?;
        if common.emit_traces {
            fs::create_dir_all(&common.out_dir)?;
            let path = common.out_dir.join(format!("trace_seed{seed}.log"));
            fs::write(&path, record.trace.to_text())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        rows.push(record.summary);
    }
    let agg = aggregate(&rows);
    rows.push(agg.clone());
    let path = write_results(&common.out_dir, &rows)?;
    print_aggregate(&format!("{} x{}", cfg.mechanism, cfg.replications), &agg);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(common: &CommonArgs, axis: &str, values: &[f64]) -> Result<()> {
    let cfg = load_config(common)?;
    let axis: SweepAxis = axis.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    if values.is_empty() {
        bail!("sweep needs at least one value (--values)");
    }
    let sweep = run_sweep(&cfg, axis, values)?;
    for (value, agg) in sweep.aggregates() {
        print_aggregate(&format!("{}={value}", axis.name()), agg);
    }
    let path = write_results(&common.out_dir, &sweep.rows())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_validate(common: &CommonArgs, levels: &[u32]) -> Result<()> {
    let cfg = load_config(common)?;
    if levels.is_empty() {
        bail!("validate-formulas needs at least one level (--levels)");
    }
    let sweep = validate_formulas(&cfg, levels)?;
    println!("level | F_pred_ms measured_ms | G_pred measured | H_pred measured");
    for (value, agg) in sweep.aggregates() {
        println!(
            "{value:5} | {:9.3} {:11.3} | {:6.4} {:8.4} | {:6.4} {:8.4}",
            agg.f_pred_ms.unwrap_or(f64::NAN),
            agg.mean_recovery_latency_ms.unwrap_or(f64::NAN),
            agg.g_pred_frac.unwrap_or(f64::NAN),
            agg.redundancy_cost_frac,
            agg.h_pred_frac.unwrap_or(f64::NAN),
            agg.goodput_reduction_frac.unwrap_or(f64::NAN),
        );
    }
    let path = write_results(&common.out_dir, &sweep.rows())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_ablation(common: &CommonArgs, bandwidths: &[f64]) -> Result<()> {
    let cfg = load_config(common)?;
    if bandwidths.is_empty() {
        bail!("ablation needs at least one bandwidth (--bandwidths)");
    }
    let result = run_ablation(&cfg, bandwidths)?;
    for (bw, with, without) in &result.points {
        print_aggregate(&format!("bw={bw} full"), &with.aggregate);
        print_aggregate(&format!("bw={bw} no-opp"), &without.aggregate);
    }
    let path = write_results(&common.out_dir, &result.rows())?;
    println!("wrote {}", path.display());
    Ok(())
}
