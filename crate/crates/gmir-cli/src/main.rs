//! `gmir` command line: dataset generation, training runs, experiments,
//! hyperparameter sweeps and report rendering, all driven by one TOML config.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gmir::config::ExperimentConfig;
use gmir::experiment::{
    self, checkpoint_path, run_experiment, run_sweep, runlog_path, write_datasets,
    write_experiment_outputs, write_sweep_outputs, SplitData,
};
use gmir::report::ExperimentReport;
use gmir::strategies::StrategyKind;
use gmir::trainer::{finetune, pretrain, Checkpoint};

#[derive(Parser)]
#[command(
    name = "gmir",
    about = "Replay-based domain-incremental learning lab",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the experiment seed list with a single seed
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for selection scoring (1 = bit-reproducible)
    #[arg(long, value_name = "INT", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the six dataset split files (old/new x train/val/test)
    GenData(Common),
    /// Pretrain on the old domain and save the checkpoint
    Pretrain(Common),
    /// Finetune one strategy from a saved pretrain checkpoint
    Finetune {
        #[command(flatten)]
        common: Common,
        /// Strategy to finetune with (defaults to the first configured one)
        #[arg(long, value_name = "NAME")]
        strategy: Option<String>,
    },
    /// Run the full experiment: scratch baselines plus every configured
    /// strategy, aggregated over seeds
    Run {
        #[command(flatten)]
        common: Common,
        /// Restrict the run to one strategy
        #[arg(long, value_name = "NAME")]
        strategy: Option<String>,
    },
    /// One finetune run per grid value of the config's [sweep] section
    Sweep(Common),
    /// Render the table view of an existing report.json
    Report {
        /// Path to a report.json produced by `run`
        #[arg(value_name = "PATH")]
        report: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(err) = dispatch() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch() -> Result<()> {
    match Cli::parse().command {
        Command::GenData(common) => {
            let (config, out) = load(&common)?;
            let files = write_datasets(&config, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Pretrain(common) => cmd_pretrain(&common),
        Command::Finetune { common, strategy } => cmd_finetune(&common, strategy.as_deref()),
        Command::Run { common, strategy } => cmd_run(&common, strategy.as_deref()),
        Command::Sweep(common) => cmd_sweep(&common),
        Command::Report { report } => {
            let report = ExperimentReport::from_json_file(&report)?;
            print!("{}", report.render_text());
            Ok(())
        }
    }
}

/// Loads the config and applies the --seed/--out overrides.
fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading config {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        config.experiment.seeds = vec![seed];
    }
    let out = common.out.clone().unwrap_or_else(|| config.output.dir.clone());
    Ok((config, out))
}

fn cmd_pretrain(common: &Common) -> Result<()> {
    let (config, out) = load(common)?;
    std::fs::create_dir_all(out.join("checkpoints"))?;
    std::fs::create_dir_all(out.join("runlogs"))?;
    for &seed in &config.experiment.seeds {
        let data = SplitData::build(&config, Some(seed))?;
        let train_seed = gmir::seeds::derive(seed, "train", 0);
        let cfg = config.pretrain.to_train_config(&config.model, train_seed);
        let outcome = pretrain(&cfg, &data.old_train, &data.old_val)?;
        let ckpt = checkpoint_path(&out, "pretrain", seed);
        outcome.best.save(&ckpt)?;
        outcome.log.write_jsonl(&runlog_path(&out, "pretrain", seed))?;
        println!(
            "pretrain seed={seed}: best val {:.2} at epoch {} -> {} ({:.2}s)",
            outcome.best.best_val_metric,
            outcome.best.epoch,
            ckpt.display(),
            outcome.ledger.wall_clock.as_secs_f64()
        );
    }
    Ok(())
}

fn cmd_finetune(common: &Common, strategy: Option<&str>) -> Result<()> {
    let (config, out) = load(common)?;
    let strategy_config = match strategy {
        Some(name) => {
            let kind = StrategyKind::parse(name)?;
            config
                .strategies
                .iter()
                .find(|s| s.kind == kind)
                .cloned()
                .unwrap_or_else(|| gmir::StrategyConfig::new(kind))
        }
        None => config
            .strategies
            .first()
            .cloned()
            .context("config lists no strategies; pass --strategy NAME")?,
    };
    std::fs::create_dir_all(out.join("checkpoints"))?;
    std::fs::create_dir_all(out.join("runlogs"))?;
    for &seed in &config.experiment.seeds {
        let ckpt_path = checkpoint_path(&out, "pretrain", seed);
        if !ckpt_path.exists() {
            bail!(
                "missing pretrained checkpoint {} (run `gmir pretrain` first)",
                ckpt_path.display()
            );
        }
        let start = Checkpoint::load(&ckpt_path)?;
        let data = SplitData::build(&config, Some(seed))?;
        let train_seed = gmir::seeds::derive(seed, "train", 0);
        let cfg = config.finetune.to_train_config(&config.model, train_seed);
        let outcome = finetune(
            &cfg,
            &strategy_config,
            &start,
            &data.new_train,
            &data.new_val,
            &data.old_train,
            &data.old_val,
            common.threads,
        )?;
        let label = strategy_config.kind.label();
        outcome.best.save(&checkpoint_path(&out, label, seed))?;
        outcome.log.write_jsonl(&runlog_path(&out, label, seed))?;
        let old = gmir::metrics::evaluate(&config.model, &outcome.best.params, &data.old_test)?;
        let new = gmir::metrics::evaluate(&config.model, &outcome.best.params, &data.new_test)?;
        println!(
            "{label} seed={seed}: old-test {old:.2} new-test {new:.2} (resamples {}, {:.2}s)",
            outcome.ledger.resample_events,
            outcome.ledger.wall_clock.as_secs_f64()
        );
    }
    Ok(())
}

fn cmd_run(common: &Common, strategy: Option<&str>) -> Result<()> {
    let (mut config, out) = load(common)?;
    if let Some(name) = strategy {
        let kind = StrategyKind::parse(name)?;
        config.strategies = vec![config
            .strategies
            .iter()
            .find(|s| s.kind == kind)
            .cloned()
            .unwrap_or_else(|| gmir::StrategyConfig::new(kind))];
    }
    log::info!("datasets are generated in-memory from the config (seed-derived)");
    let result = run_experiment(&config, common.threads)?;
    write_experiment_outputs(&result, &out)?;
    print!("{}", result.report.render_text());
    print_wall_clock(&result.runs);
    println!("report written to {}", out.join("report.json").display());
    Ok(())
}

fn cmd_sweep(common: &Common) -> Result<()> {
    let (config, out) = load(common)?;
    if config.sweep.is_none() {
        bail!(
            "config {} has no [sweep] section",
            common.config.display()
        );
    }
    let result = run_sweep(&config, common.threads)?;
    write_sweep_outputs(&result, &out)?;
    print!("{}", result.report.render_text());
    print_wall_clock(&result.runs);
    println!("sweep report written to {}", out.join("sweep.json").display());
    Ok(())
}

fn print_wall_clock(runs: &[experiment::RunArtifacts]) {
    let total: f64 = runs.iter().map(|r| r.log.ledger.wall_clock.as_secs_f64()).sum();
    println!("total wall-clock across runs: {total:.2}s");
}
