//! Experiment configuration: one human-editable TOML file drives data
//! generation, pretraining, finetuning strategies, and sweeps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DomainSpec, Generator};
use crate::error::{Error, Result};
use crate::net::ModelConfig;
use crate::seeds;
use crate::strategies::{StrategyConfig, StrategyKind};
use crate::trainer::TrainConfig;

/// The whole experiment file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub pretrain: TrainParams,
    #[serde(default)]
    pub finetune: TrainParams,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub strategies: Vec<StrategyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Data section: two domain recipes plus split ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub old: DomainSection,
    pub new: DomainSection,
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    #[serde(default)]
    pub split_seed: u64,
}

fn default_ratios() -> [f64; 3] {
    [0.6, 0.15, 0.25]
}

/// One domain recipe; rotation is written in degrees for readability.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub generator: Generator,
    pub size: usize,
    #[serde(default)]
    pub seed: u64,
    pub sigma: f64,
    #[serde(default)]
    pub rotation_deg: f64,
    #[serde(default = "zero_offset")]
    pub offset: [f64; 2],
}

fn zero_offset() -> [f64; 2] {
    [0.0, 0.0]
}

impl DomainSection {
    pub fn to_spec(&self, seed: u64) -> DomainSpec {
        DomainSpec {
            generator: self.generator,
            offset: self.offset,
            rotation: self.rotation_deg.to_radians(),
            sigma: self.sigma,
            size: self.size,
            seed,
        }
    }
}

/// Epochs/batch/lr knobs shared by pretrain and finetune sections.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
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

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            lr: default_lr(),
            eval_every: default_eval_every(),
        }
    }
}

impl TrainParams {
    pub fn to_train_config(&self, model: &ModelConfig, seed: u64) -> TrainConfig {
        TrainConfig {
            model: model.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed,
            eval_every: self.eval_every,
        }
    }
}

/// Which runs to execute and with which seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_scratch")]
    pub scratch: Vec<ScratchRun>,
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_scratch() -> Vec<ScratchRun> {
    vec![ScratchRun::Clear, ScratchRun::Adverse, ScratchRun::All]
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            scratch: default_scratch(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScratchRun {
    Clear,
    Adverse,
    All,
}

impl ScratchRun {
    pub fn label(self) -> &'static str {
        match self {
            ScratchRun::Clear => "scratch-clear",
            ScratchRun::Adverse => "scratch-adverse",
            ScratchRun::All => "scratch-all",
        }
    }
}

/// Grid over exactly one GMIR hyperparameter; the others stay at the base
/// strategy's values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_strategy")]
    pub strategy: StrategyKind,
    pub parameter: SweepParameter,
    #[serde(deserialize_with = "de_numbers")]
    pub values: Vec<f64>,
}

fn default_sweep_strategy() -> StrategyKind {
    StrategyKind::Gmir
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    DFraction,
    K,
    NResample,
}

impl SweepParameter {
    pub fn label(self) -> &'static str {
        match self {
            SweepParameter::DFraction => "d_fraction",
            SweepParameter::K => "k",
            SweepParameter::NResample => "n_resample",
        }
    }
}

/// Accepts both integer and float literals in the values array.
fn de_numbers<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    let raw = Vec::<toml::Value>::deserialize(de)?;
    raw.into_iter()
        .map(|v| match v {
            toml::Value::Integer(i) => Ok(i as f64),
            toml::Value::Float(f) => Ok(f),
            other => Err(serde::de::Error::custom(format!(
                "sweep values must be numbers, got {other}"
            ))),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.data.old.to_spec(0).validate()?;
        self.data.new.to_spec(0).validate()?;
        if self.experiment.seeds.is_empty() {
            return Err(Error::InvalidConfig("experiment.seeds must be nonempty".into()));
        }
        if self.experiment.scratch.is_empty() && self.strategies.is_empty() {
            return Err(Error::InvalidConfig(
                "nothing to run: no scratch runs and no strategies".into(),
            ));
        }
        if !self.strategies.is_empty()
            && !self.experiment.scratch.contains(&ScratchRun::Clear)
        {
            return Err(Error::InvalidConfig(
                "finetuning strategies need the clear scratch run as their pretrained checkpoint"
                    .into(),
            ));
        }
        for strategy in &self.strategies {
            strategy.validate()?;
        }
        let mut labels: Vec<&str> = self.strategies.iter().map(|s| s.kind.label()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.strategies.len() {
            return Err(Error::InvalidConfig(
                "duplicate strategy kinds; use the sweep section for grids over one strategy"
                    .into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidConfig("sweep.values must be nonempty".into()));
            }
            for &v in &sweep.values {
                sweep_value_check(sweep.parameter, v)?;
            }
        }
        Ok(())
    }

    /// Normalized config echo with every effective value filled in.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// The base strategy config a sweep varies: the matching entry in
    /// `strategies`, or defaults for the sweep's kind.
    pub fn sweep_base_strategy(&self) -> Result<StrategyConfig> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("config has no [sweep] section".into()))?;
        Ok(self
            .strategies
            .iter()
            .find(|s| s.kind == sweep.strategy)
            .cloned()
            .unwrap_or_else(|| StrategyConfig::new(sweep.strategy)))
    }

    /// Domain specs and split seeds for one experiment seed. `None` uses the
    /// config's base seeds verbatim (the `gen-data` files); `Some(s)` derives
    /// an independent dataset per experiment seed.
    pub fn seeded_data(&self, experiment_seed: Option<u64>) -> SeededData {
        match experiment_seed {
            None => SeededData {
                old: self.data.old.to_spec(self.data.old.seed),
                new: self.data.new.to_spec(self.data.new.seed),
                split_old: self.data.split_seed,
                split_new: seeds::derive(self.data.split_seed, "split-new", 0),
            },
            Some(s) => SeededData {
                old: self.data.old.to_spec(seeds::derive(s, "data-old", self.data.old.seed)),
                new: self.data.new.to_spec(seeds::derive(s, "data-new", self.data.new.seed)),
                split_old: seeds::derive(s, "split-old", self.data.split_seed),
                split_new: seeds::derive(s, "split-new", self.data.split_seed),
            },
        }
    }
}

/// Fully seeded domain/split recipe for one run.
pub struct SeededData {
    pub old: DomainSpec,
    pub new: DomainSpec,
    pub split_old: u64,
    pub split_new: u64,
}

/// Applies one sweep grid value to a strategy config.
pub fn apply_sweep_value(
    base: &StrategyConfig,
    parameter: SweepParameter,
    value: f64,
) -> Result<StrategyConfig> {
    sweep_value_check(parameter, value)?;
    let mut config = base.clone();
    match parameter {
        SweepParameter::DFraction => config.d_fraction = value,
        SweepParameter::K => {
            config.k = if value < 1.0 {
                crate::strategies::BufferSize::Fraction(value)
            } else {
                crate::strategies::BufferSize::Count(value.round() as usize)
            };
        }
        SweepParameter::NResample => config.n_resample = value.round() as usize,
    }
    config.validate()?;
    Ok(config)
}

fn sweep_value_check(parameter: SweepParameter, value: f64) -> Result<()> {
    let ok = match parameter {
        SweepParameter::DFraction => value > 0.0 && value <= 1.0,
        SweepParameter::K => value > 0.0,
        SweepParameter::NResample => {
            value >= 1.0 && (value - value.round()).abs() < 1e-9
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "bad sweep value {value} for {}",
            parameter.label()
        )))
    }
}
