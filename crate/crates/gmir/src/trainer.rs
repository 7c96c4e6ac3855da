//! Training orchestration: scratch training, strategy-driven finetuning,
//! checkpointing and run logging.
//!
//! The loop is sequential; scoring inside resampling events may fan out to
//! worker threads. With `threads = 1` everything is bitwise reproducible for
//! a fixed seed.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::net::{self, grad_with_loss, init_params, sgd_step, GradVector, ModelConfig, ParamVector};
use crate::replay::{sample_ids_without_replacement, InterferenceScore};
use crate::seeds;
use crate::strategies::{build_strategy, StrategyConfig, StrategyEnv, StrategyKind};
use crate::timing::TimingLedger;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn default_epochs() -> usize {
    80
}
fn default_batch_size() -> usize {
    8
}
fn default_lr() -> f64 {
    0.01
}
fn default_eval_every() -> usize {
    5
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.eval_every < 1 {
            return Err(Error::InvalidConfig("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Best-so-far model state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub params: ParamVector,
    pub best_val_metric: f64,
    pub epoch: usize,
}

/// One buffer repopulation, as recorded in the run log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResampleRecord {
    /// Completed epochs when the event fired.
    pub epoch: usize,
    pub kind: StrategyKind,
    pub sample_ids: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<InterferenceScore>>,
}

/// Per-epoch log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based index of the epoch this record closes.
    pub epoch: usize,
    pub mean_loss: f64,
    /// Validation metrics (one per validation set) when evaluation was due.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_metrics: Option<Vec<f64>>,
    /// Resampling event fired at this epoch's start boundary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample: Option<ResampleRecord>,
}

/// Structured log of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLog {
    pub label: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub ledger: TimingLedger,
}

impl RunLog {
    pub fn resample_records(&self) -> impl Iterator<Item = &ResampleRecord> {
        self.epochs.iter().filter_map(|e| e.resample.as_ref())
    }

    /// One JSON record per line: a header, each epoch, then the ledger.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!(
            "{}\n",
            serde_json::json!({"run": self.label, "seed": self.seed})
        ));
        for record in &self.epochs {
            out.push_str(&serde_json::to_string(record).expect("epoch record serializes"));
            out.push('\n');
        }
        out.push_str(&format!(
            "{}\n",
            serde_json::json!({"ledger": &self.ledger})
        ));
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub ledger: TimingLedger,
    pub log: RunLog,
}

/// Scratch training: seeded init, shuffled minibatch SGD, best-checkpoint
/// tracking on the mean accuracy over `val_sets`.
pub fn train_scratch(
    config: &TrainConfig,
    train: &Dataset,
    val_sets: &[&Dataset],
    label: &str,
) -> Result<TrainOutcome> {
    config.validate()?;
    let started = Instant::now();
    let mut params = init_params(&config.model, seeds::derive(config.seed, "init", 0))?;
    let mut ledger = TimingLedger::default();
    let mut log = RunLog {
        label: label.to_string(),
        seed: config.seed,
        epochs: Vec::with_capacity(config.epochs),
        ledger: TimingLedger::default(),
    };
    let mut best: Option<Checkpoint> = None;
    let ids: Vec<u64> = train.ids().collect();

    for epoch in 1..=config.epochs {
        let mut epoch_ids = ids.clone();
        shuffle_ids(&mut epoch_ids, config.seed, epoch);
        let mean_loss = run_batches(config, &mut params, &epoch_ids, &[train], config.lr, &mut ledger, None)?.0;

        let val_metrics = if eval_due(epoch, config) {
            let metrics = eval_all(&config.model, &params, val_sets)?;
            consider_best(&mut best, &config.model, &params, &metrics, epoch);
            Some(metrics)
        } else {
            None
        };
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            val_metrics,
            resample: None,
        });
    }

    ledger.wall_clock = started.elapsed();
    log.ledger = ledger.clone();
    Ok(TrainOutcome {
        best: best.expect("final epoch always evaluates"),
        ledger,
        log,
    })
}

/// Pretraining on the old domain; the checkpoint feeds every finetune run.
pub fn pretrain(config: &TrainConfig, train: &Dataset, val: &Dataset) -> Result<TrainOutcome> {
    train_scratch(config, train, &[val], "pretrain")
}

/// Strategy-driven finetuning from a pretrained checkpoint.
///
/// Per epoch: the strategy may resample its buffer at the start boundary
/// (GMIR scores against the raw gradient of the previous epoch's final
/// minibatch), the epoch then iterates the strategy's shuffled batch source,
/// and every gradient passes through the strategy's transform before the SGD
/// step. Best-checkpoint tracking uses the mean of old-val and new-val
/// accuracy.
#[allow(clippy::too_many_arguments)]
pub fn finetune(
    config: &TrainConfig,
    strategy_config: &StrategyConfig,
    start: &Checkpoint,
    new_train: &Dataset,
    new_val: &Dataset,
    old_train: &Dataset,
    old_val: &Dataset,
    threads: usize,
) -> Result<TrainOutcome> {
    config.validate()?;
    strategy_config.validate()?;
    if start.model != config.model {
        return Err(Error::InvalidConfig(
            "checkpoint model does not match the finetune model".into(),
        ));
    }
    let started = Instant::now();

    // The D-pool: the old-train subset visible to retrieval, fixed once.
    let pool = build_pool(old_train, strategy_config.d_fraction, config.seed)?;
    let k = strategy_config.resolved_k(old_train.len());
    let mut strategy = build_strategy(strategy_config, k, config.seed)?;
    let env = StrategyEnv {
        model: &config.model,
        old_pool: &pool,
        old_train_full: old_train,
        new_train,
        batch_size: config.batch_size,
        threads,
    };
    let lr = strategy_config.effective_lr(config.lr);

    let mut params = start.params.clone();
    let mut ledger = TimingLedger::default();
    let mut log = RunLog {
        label: strategy_config.kind.label().to_string(),
        seed: config.seed,
        epochs: Vec::with_capacity(config.epochs),
        ledger: TimingLedger::default(),
    };
    let mut best: Option<Checkpoint> = None;
    let mut last_grad: Option<GradVector> = None;

    strategy.on_finetune_start(&env, &params, &mut ledger)?;

    for epoch in 1..=config.epochs {
        let resample = strategy
            .on_epoch_start(&env, &params, epoch - 1, last_grad.as_ref(), &mut ledger)?
            .map(|buffer| {
                ledger.resample_events += 1;
                ResampleRecord {
                    epoch: buffer.selected_at_epoch,
                    kind: strategy_config.kind,
                    sample_ids: buffer.sample_ids.clone(),
                    scores: buffer.scores.clone(),
                }
            });

        let mut epoch_ids = strategy.batch_source(&env);
        if strategy_config.kind.replays_jointly() {
            let buffer = strategy.active_buffer().expect("buffer initialized");
            debug_assert!(
                epoch_ids
                    .iter()
                    .all(|id| new_train.contains_id(*id) || buffer.contains(*id)),
                "replayed id outside the active buffer"
            );
        }
        shuffle_ids(&mut epoch_ids, config.seed, epoch);

        let (mean_loss, final_grad) = run_batches(
            config,
            &mut params,
            &epoch_ids,
            &[new_train, &pool],
            lr,
            &mut ledger,
            Some((strategy.as_mut(), &env)),
        )?;
        last_grad = final_grad;

        let val_metrics = if eval_due(epoch, config) {
            let metrics = eval_all(&config.model, &params, &[old_val, new_val])?;
            consider_best(&mut best, &config.model, &params, &metrics, epoch);
            Some(metrics)
        } else {
            None
        };
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            val_metrics,
            resample,
        });
    }

    ledger.wall_clock = started.elapsed();
    log.ledger = ledger.clone();
    Ok(TrainOutcome {
        best: best.expect("final epoch always evaluates"),
        ledger,
        log,
    })
}

/// One epoch of minibatch SGD over `epoch_ids`. Returns the mean per-sample
/// loss and the raw (pre-transform) gradient of the final minibatch.
fn run_batches(
    config: &TrainConfig,
    params: &mut ParamVector,
    epoch_ids: &[u64],
    lookup_sets: &[&Dataset],
    lr: f64,
    ledger: &mut TimingLedger,
    mut strategy: Option<(&mut dyn crate::strategies::Strategy, &StrategyEnv)>,
) -> Result<(f64, Option<GradVector>)> {
    let mut loss_sum = 0.0;
    let mut last_grad = None;
    let batch_count = epoch_ids.len().div_ceil(config.batch_size);
    for (b, chunk) in epoch_ids.chunks(config.batch_size).enumerate() {
        let batch: Vec<&Sample> = chunk
            .iter()
            .map(|&id| resolve(lookup_sets, id))
            .collect::<Result<_>>()?;
        let (raw, batch_loss) = grad_with_loss(&config.model, params, &batch)?;
        loss_sum += batch_loss * batch.len() as f64;
        if b + 1 == batch_count {
            last_grad = Some(raw.clone());
        }
        let grad = match &mut strategy {
            Some((strategy, env)) => strategy.transform_gradient(env, params, raw, ledger)?,
            None => raw,
        };
        *params = sgd_step(params, &grad, lr);
        ledger.train_steps += 1;
        ledger.train_sample_grads += batch.len() as u64;
    }
    Ok((loss_sum / epoch_ids.len() as f64, last_grad))
}

fn resolve<'a>(sets: &[&'a Dataset], id: u64) -> Result<&'a Sample> {
    sets.iter()
        .find_map(|d| d.by_id(id))
        .ok_or_else(|| Error::InvalidInput(format!("sample id {id} not found")))
}

fn shuffle_ids(ids: &mut [u64], seed: u64, epoch: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "shuffle", epoch as u64));
    ids.shuffle(&mut rng);
}

fn eval_due(epoch: usize, config: &TrainConfig) -> bool {
    epoch.is_multiple_of(config.eval_every) || epoch == config.epochs
}

fn eval_all(model: &ModelConfig, params: &ParamVector, val_sets: &[&Dataset]) -> Result<Vec<f64>> {
    val_sets.iter().map(|d| evaluate(model, params, d)).collect()
}

/// Replace the best checkpoint on strictly greater mean metric; earliest wins
/// ties.
fn consider_best(
    best: &mut Option<Checkpoint>,
    model: &ModelConfig,
    params: &ParamVector,
    metrics: &[f64],
    epoch: usize,
) {
    let mean = metrics.iter().sum::<f64>() / metrics.len() as f64;
    let better = match best {
        Some(b) => mean > b.best_val_metric,
        None => true,
    };
    if better {
        *best = Some(Checkpoint {
            model: model.clone(),
            params: params.clone(),
            best_val_metric: mean,
            epoch,
        });
    }
}

/// The retrieval pool: `round(d_fraction * |old_train|)` samples chosen once
/// per run (the whole split when `d_fraction == 1`).
pub fn build_pool(old_train: &Dataset, d_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(d_fraction > 0.0 && d_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "d_fraction must be in (0, 1], got {d_fraction}"
        )));
    }
    if d_fraction >= 1.0 {
        return Ok(old_train.clone());
    }
    let m = ((d_fraction * old_train.len() as f64).round() as usize).clamp(1, old_train.len());
    let ids = sample_ids_without_replacement(old_train, m, seeds::derive(seed, "d-pool", 0))?;
    old_train.subset(&ids, old_train.split())
}

// --- checkpoint file format ----------------------------------------------
//
//   gmir-checkpoint v1
//   model input_dim=<d> hidden=<h1,h2|none> classes=<c> activation=<relu|tanh>
//   epoch=<e>
//   best_val_metric=<float>
//   params count=<P>
//   <one value per line, 17 significant digits>

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let hidden = if self.model.hidden_dims.is_empty() {
            "none".to_string()
        } else {
            self.model
                .hidden_dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let activation = match self.model.activation {
            net::Activation::Relu => "relu",
            net::Activation::Tanh => "tanh",
        };
        let mut out = String::new();
        out.push_str("gmir-checkpoint v1\n");
        out.push_str(&format!(
            "model input_dim={} hidden={} classes={} activation={}\n",
            self.model.input_dim, hidden, self.model.num_classes, activation
        ));
        out.push_str(&format!("epoch={}\n", self.epoch));
        out.push_str(&format!("best_val_metric={:.16e}\n", self.best_val_metric));
        out.push_str(&format!("params count={}\n", self.params.len()));
        for v in self.params.values() {
            out.push_str(&format!("{v:.16e}\n"));
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("{}: missing {what}", path.display())))
        };
        if next("magic")? != "gmir-checkpoint v1" {
            return Err(Error::Parse(format!(
                "{}: not a gmir-checkpoint v1 file",
                path.display()
            )));
        }
        let model_line = next("model line")?;
        let model = parse_model_line(&model_line, path)?;
        let epoch: usize = parse_kv(&next("epoch line")?, "epoch", path)?;
        let best_val_metric: f64 = parse_kv(&next("metric line")?, "best_val_metric", path)?;
        let count_line = next("params line")?;
        let count: usize = count_line
            .strip_prefix("params count=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{}: bad params header", path.display())))?;
        let mut values = Vec::with_capacity(count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            values.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}: bad value: {e}", path.display())))?,
            );
        }
        if values.len() != count || count != model.param_count() {
            return Err(Error::Parse(format!(
                "{}: expected {} values for this model, found {}",
                path.display(),
                model.param_count(),
                values.len()
            )));
        }
        Ok(Checkpoint {
            model,
            params: ParamVector::from_values(values),
            best_val_metric,
            epoch,
        })
    }
}

fn parse_model_line(line: &str, path: &Path) -> Result<ModelConfig> {
    let mut fields = std::collections::HashMap::new();
    for part in line.split_whitespace().skip(1) {
        if let Some((k, v)) = part.split_once('=') {
            fields.insert(k, v);
        }
    }
    let bad = |what: &str| Error::Parse(format!("{}: bad model field {what}", path.display()));
    let input_dim = fields
        .get("input_dim")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("input_dim"))?;
    let hidden_dims = match fields.get("hidden") {
        Some(&"none") => Vec::new(),
        Some(v) => v
            .split(',')
            .map(|d| d.parse().map_err(|_| bad("hidden")))
            .collect::<Result<_>>()?,
        None => return Err(bad("hidden")),
    };
    let num_classes = fields
        .get("classes")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("classes"))?;
    let activation = match fields.get("activation") {
        Some(&"relu") => net::Activation::Relu,
        Some(&"tanh") => net::Activation::Tanh,
        _ => return Err(bad("activation")),
    };
    Ok(ModelConfig {
        input_dim,
        hidden_dims,
        num_classes,
        activation,
    })
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str, path: &Path) -> Result<T> {
    line.strip_prefix(&format!("{key}="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("{}: bad {key} line", path.display())))
}
