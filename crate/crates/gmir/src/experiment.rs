//! Full experiment pipeline: per-seed data generation, scratch baselines,
//! strategy finetuning, transfer metrics, sweeps, and output files.

use std::path::{Path, PathBuf};

use crate::config::{apply_sweep_value, ExperimentConfig, ScratchRun, SeededData};
use crate::data::{generate_domain, merge, split, Dataset, Domain};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, transfer_metrics, DomainResult};
use crate::report::{ExperimentReport, ReportRow, SeedOutcome, SweepPoint, SweepReport};
use crate::seeds;
use crate::trainer::{finetune, train_scratch, Checkpoint, RunLog, TrainOutcome};

/// The six datasets of one experiment seed.
pub struct SplitData {
    pub old_train: Dataset,
    pub old_val: Dataset,
    pub old_test: Dataset,
    pub new_train: Dataset,
    pub new_val: Dataset,
    pub new_test: Dataset,
}

impl SplitData {
    pub fn build(config: &ExperimentConfig, experiment_seed: Option<u64>) -> Result<SplitData> {
        let SeededData {
            old,
            new,
            split_old,
            split_new,
        } = config.seeded_data(experiment_seed);
        let ratios = (
            config.data.ratios[0],
            config.data.ratios[1],
            config.data.ratios[2],
        );
        let old_all = generate_domain(&old, Domain::Old, 0)?;
        let new_all = generate_domain(&new, Domain::New, old.size as u64)?;
        let (old_train, old_val, old_test) = split(&old_all, ratios, split_old)?;
        let (new_train, new_val, new_test) = split(&new_all, ratios, split_new)?;
        Ok(SplitData {
            old_train,
            old_val,
            old_test,
            new_train,
            new_val,
            new_test,
        })
    }
}

/// One finished run: its best checkpoint, log and test metrics.
pub struct RunArtifacts {
    pub label: String,
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub log: RunLog,
    pub result: DomainResult,
}

/// Everything `run` produces before files are written.
pub struct ExperimentResult {
    pub report: ExperimentReport,
    pub runs: Vec<RunArtifacts>,
}

/// Executes the configured scratch runs and strategy finetunes over every
/// experiment seed and aggregates the report.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let seeds_list = &config.experiment.seeds;
    let mut runs: Vec<RunArtifacts> = Vec::new();
    // label -> per-seed outcomes, in first-appearance order
    let mut order: Vec<String> = Vec::new();
    let mut by_label: std::collections::HashMap<String, Vec<SeedOutcome>> =
        std::collections::HashMap::new();

    for &seed in seeds_list {
        let data = SplitData::build(config, Some(seed))?;
        let train_seed = seeds::derive(seed, "train", 0);
        let pre_cfg = config.pretrain.to_train_config(&config.model, train_seed);
        let fine_cfg = config.finetune.to_train_config(&config.model, train_seed);

        // Scratch runs; the clear run doubles as the pretrained checkpoint.
        let mut pretrain_ckpt: Option<Checkpoint> = None;
        let mut lb_old: Option<f64> = None;
        let mut lb_new: Option<f64> = None;
        for scratch in &config.experiment.scratch {
            let outcome = match scratch {
                ScratchRun::Clear => {
                    let out =
                        train_scratch(&pre_cfg, &data.old_train, &[&data.old_val], "scratch-clear")?;
                    pretrain_ckpt = Some(out.best.clone());
                    out
                }
                ScratchRun::Adverse => {
                    train_scratch(&pre_cfg, &data.new_train, &[&data.new_val], "scratch-adverse")?
                }
                ScratchRun::All => {
                    let all_train = merge(&data.old_train, &data.new_train)?;
                    train_scratch(
                        &pre_cfg,
                        &all_train,
                        &[&data.old_val, &data.new_val],
                        "scratch-all",
                    )?
                }
            };
            let (old_metric, new_metric) = record_run(
                config, &data, scratch.label(), &outcome, None, seed, &mut order, &mut by_label,
                &mut runs,
            )?;
            match scratch {
                ScratchRun::Clear => lb_old = Some(old_metric),
                ScratchRun::Adverse => lb_new = Some(new_metric),
                ScratchRun::All => {}
            }
        }

        // Strategy finetunes from the shared pretrained checkpoint.
        if !config.strategies.is_empty() {
            let start = pretrain_ckpt.as_ref().ok_or_else(|| {
                Error::InvalidConfig("finetuning requires the clear scratch run".into())
            })?;
            let transfer = match (lb_old, lb_new) {
                (Some(o), Some(n)) => Some((o, n)),
                _ => None,
            };
            for strategy in &config.strategies {
                let outcome = finetune(
                    &fine_cfg,
                    strategy,
                    start,
                    &data.new_train,
                    &data.new_val,
                    &data.old_train,
                    &data.old_val,
                    threads,
                )?;
                record_run(
                    config,
                    &data,
                    strategy.kind.label(),
                    &outcome,
                    transfer,
                    seed,
                    &mut order,
                    &mut by_label,
                    &mut runs,
                )?;
            }
        }
    }

    let rows = order
        .into_iter()
        .map(|label| {
            let outcomes = by_label.remove(&label).expect("label recorded");
            ReportRow::from_outcomes(&label, outcomes)
        })
        .collect();
    Ok(ExperimentResult {
        report: ExperimentReport {
            seeds: seeds_list.clone(),
            rows,
            config_echo: config.echo_toml(),
        },
        runs,
    })
}

/// Evaluates a finished run on both test splits and appends it to the report
/// accumulators. Returns the (old, new) test metrics.
#[allow(clippy::too_many_arguments)]
fn record_run(
    config: &ExperimentConfig,
    data: &SplitData,
    label: &str,
    outcome: &TrainOutcome,
    transfer: Option<(f64, f64)>,
    seed: u64,
    order: &mut Vec<String>,
    by_label: &mut std::collections::HashMap<String, Vec<SeedOutcome>>,
    runs: &mut Vec<RunArtifacts>,
) -> Result<(f64, f64)> {
    let old_metric = evaluate(&config.model, &outcome.best.params, &data.old_test)?;
    let new_metric = evaluate(&config.model, &outcome.best.params, &data.new_test)?;
    let result = DomainResult {
        run_label: label.to_string(),
        old_metric,
        new_metric,
    };
    let (bwt, fwt) = match transfer {
        Some((lb_old, lb_new)) => {
            let t = transfer_metrics(&result, lb_old, lb_new);
            (Some(t.backward_transfer), Some(t.forward_transfer))
        }
        None => (None, None),
    };
    if !by_label.contains_key(label) {
        order.push(label.to_string());
    }
    by_label.entry(label.to_string()).or_default().push(SeedOutcome {
        seed,
        old_metric,
        new_metric,
        mean_metric: (old_metric + new_metric) / 2.0,
        backward_transfer: bwt,
        forward_transfer: fwt,
        ledger: outcome.ledger.counters(),
    });
    runs.push(RunArtifacts {
        label: label.to_string(),
        seed,
        checkpoint: outcome.best.clone(),
        log: relabel(outcome.log.clone(), label),
        result,
    });
    Ok((old_metric, new_metric))
}

fn relabel(mut log: RunLog, label: &str) -> RunLog {
    log.label = label.to_string();
    log
}

/// Everything `sweep` produces before files are written.
pub struct SweepResult {
    pub report: SweepReport,
    pub runs: Vec<RunArtifacts>,
}

/// One finetune run per grid value, sharing the per-seed pretrained
/// checkpoint and the scratch lower bounds.
pub fn run_sweep(config: &ExperimentConfig, threads: usize) -> Result<SweepResult> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config has no [sweep] section".into()))?;
    let base = config.sweep_base_strategy()?;
    let grid: Vec<_> = sweep
        .values
        .iter()
        .map(|&v| apply_sweep_value(&base, sweep.parameter, v).map(|cfg| (v, cfg)))
        .collect::<Result<_>>()?;

    let mut runs: Vec<RunArtifacts> = Vec::new();
    let mut outcomes_by_value: Vec<Vec<SeedOutcome>> = vec![Vec::new(); grid.len()];

    for &seed in &config.experiment.seeds {
        let data = SplitData::build(config, Some(seed))?;
        let train_seed = seeds::derive(seed, "train", 0);
        let pre_cfg = config.pretrain.to_train_config(&config.model, train_seed);
        let fine_cfg = config.finetune.to_train_config(&config.model, train_seed);

        let pre = train_scratch(&pre_cfg, &data.old_train, &[&data.old_val], "scratch-clear")?;
        let lb_old = evaluate(&config.model, &pre.best.params, &data.old_test)?;
        let adverse =
            train_scratch(&pre_cfg, &data.new_train, &[&data.new_val], "scratch-adverse")?;
        let lb_new = evaluate(&config.model, &adverse.best.params, &data.new_test)?;

        for (i, (value, strategy)) in grid.iter().enumerate() {
            let outcome = finetune(
                &fine_cfg,
                strategy,
                &pre.best,
                &data.new_train,
                &data.new_val,
                &data.old_train,
                &data.old_val,
                threads,
            )?;
            let label = format!("{} {}={}", strategy.kind.label(), sweep.parameter.label(), value);
            let old_metric = evaluate(&config.model, &outcome.best.params, &data.old_test)?;
            let new_metric = evaluate(&config.model, &outcome.best.params, &data.new_test)?;
            let result = DomainResult {
                run_label: label.clone(),
                old_metric,
                new_metric,
            };
            let t = transfer_metrics(&result, lb_old, lb_new);
            outcomes_by_value[i].push(SeedOutcome {
                seed,
                old_metric,
                new_metric,
                mean_metric: t.mean_metric,
                backward_transfer: Some(t.backward_transfer),
                forward_transfer: Some(t.forward_transfer),
                ledger: outcome.ledger.counters(),
            });
            runs.push(RunArtifacts {
                label,
                seed,
                checkpoint: outcome.best.clone(),
                log: outcome.log,
                result,
            });
        }
    }

    let points = grid
        .iter()
        .zip(outcomes_by_value)
        .map(|((value, strategy), outcomes)| SweepPoint {
            value: *value,
            row: ReportRow::from_outcomes(strategy.kind.label(), outcomes),
        })
        .collect();
    Ok(SweepResult {
        report: SweepReport {
            strategy: sweep.strategy,
            parameter: sweep.parameter,
            seeds: config.experiment.seeds.clone(),
            points,
            config_echo: config.echo_toml(),
        },
        runs,
    })
}

// --- output files ---------------------------------------------------------

pub fn dataset_path(out_dir: &Path, domain: &str, split: &str) -> PathBuf {
    out_dir.join(format!("{domain}_{split}.txt"))
}

pub fn checkpoint_path(out_dir: &Path, label: &str, seed: u64) -> PathBuf {
    out_dir.join("checkpoints").join(format!("{label}-seed{seed}.ckpt"))
}

pub fn runlog_path(out_dir: &Path, label: &str, seed: u64) -> PathBuf {
    out_dir.join("runlogs").join(format!("{label}-seed{seed}.jsonl"))
}

/// Writes the six split files for the config's base data seeds.
pub fn write_datasets(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let data = SplitData::build(config, None)?;
    let files = [
        ("old", "train", &data.old_train),
        ("old", "val", &data.old_val),
        ("old", "test", &data.old_test),
        ("new", "train", &data.new_train),
        ("new", "val", &data.new_val),
        ("new", "test", &data.new_test),
    ];
    let mut written = Vec::new();
    for (domain, split, dataset) in files {
        let path = dataset_path(out_dir, domain, split);
        dataset.save(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes report.json / report.txt (deterministic) plus per-run checkpoints,
/// logs and a volatile timings.txt with wall-clock seconds.
pub fn write_experiment_outputs(result: &ExperimentResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir.join("checkpoints"))?;
    std::fs::create_dir_all(out_dir.join("runlogs"))?;
    std::fs::write(out_dir.join("report.json"), result.report.to_json())?;
    std::fs::write(out_dir.join("report.txt"), result.report.render_text())?;
    std::fs::write(out_dir.join("config.toml"), &result.report.config_echo)?;
    write_run_files(&result.runs, out_dir)?;
    Ok(())
}

pub fn write_sweep_outputs(result: &SweepResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir.join("checkpoints"))?;
    std::fs::create_dir_all(out_dir.join("runlogs"))?;
    std::fs::write(out_dir.join("sweep.json"), result.report.to_json())?;
    std::fs::write(out_dir.join("sweep.txt"), result.report.render_text())?;
    std::fs::write(out_dir.join("config.toml"), &result.report.config_echo)?;
    write_run_files(&result.runs, out_dir)?;
    Ok(())
}

fn write_run_files(runs: &[RunArtifacts], out_dir: &Path) -> Result<()> {
    let mut timings = String::from("# wall-clock per run (seconds); hardware-dependent\n");
    for run in runs {
        let safe_label = run.label.replace([' ', '='], "_");
        run.checkpoint
            .save(&checkpoint_path(out_dir, &safe_label, run.seed))?;
        run.log.write_jsonl(&runlog_path(out_dir, &safe_label, run.seed))?;
        timings.push_str(&format!(
            "{} seed={} {:.3}\n",
            run.label,
            run.seed,
            run.log.ledger.wall_clock.as_secs_f64()
        ));
    }
    std::fs::write(out_dir.join("timings.txt"), timings)?;
    Ok(())
}
