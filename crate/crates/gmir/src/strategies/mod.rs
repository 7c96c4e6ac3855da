//! Pluggable finetuning strategies.
//!
//! Every strategy is driven through four hooks: buffer/state setup at
//! finetune start, a resampling opportunity at each epoch boundary, the
//! sample IDs each epoch iterates over, and a gradient transform applied
//! before every SGD step. The trainer stays strategy-agnostic.

mod agem;
mod buffered;
mod ewc;
mod gss;
mod mir;
mod noreplay;

pub use agem::{agem_project, AgemStrategy};
pub use buffered::BufferedReplayStrategy;
pub use ewc::{ewc_fisher, ewc_penalty_grad, EwcStrategy, FisherDiagonal};
pub use gss::gss_select;
pub use mir::mir_epoch_select;
pub use noreplay::NoReplayStrategy;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::net::{GradVector, ModelConfig, ParamVector};
use crate::replay::ReplayBuffer;
use crate::timing::TimingLedger;

/// Which finetuning strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Naive,
    LowLr,
    Ewc,
    MirEpoch,
    Agem,
    AgemPlus,
    Gss,
    FixedSampling,
    RandomResampling,
    Gmir,
    GmirPlus,
}

impl StrategyKind {
    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Naive => "naive",
            StrategyKind::LowLr => "low-lr",
            StrategyKind::Ewc => "ewc",
            StrategyKind::MirEpoch => "mir-epoch",
            StrategyKind::Agem => "agem",
            StrategyKind::AgemPlus => "agem-plus",
            StrategyKind::Gss => "gss",
            StrategyKind::FixedSampling => "fixed-sampling",
            StrategyKind::RandomResampling => "random-resampling",
            StrategyKind::Gmir => "gmir",
            StrategyKind::GmirPlus => "gmir-plus",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let kind = match name {
            "naive" => StrategyKind::Naive,
            "low-lr" => StrategyKind::LowLr,
            "ewc" => StrategyKind::Ewc,
            "mir-epoch" => StrategyKind::MirEpoch,
            "agem" => StrategyKind::Agem,
            "agem-plus" => StrategyKind::AgemPlus,
            "gss" => StrategyKind::Gss,
            "fixed-sampling" => StrategyKind::FixedSampling,
            "random-resampling" => StrategyKind::RandomResampling,
            "gmir" => StrategyKind::Gmir,
            "gmir-plus" => StrategyKind::GmirPlus,
            other => {
                return Err(Error::InvalidConfig(format!("unknown strategy kind '{other}'")))
            }
        };
        Ok(kind)
    }

    /// True for strategies that keep a replay buffer.
    pub fn uses_buffer(self) -> bool {
        !matches!(self, StrategyKind::Naive | StrategyKind::LowLr | StrategyKind::Ewc)
    }

    /// True for strategies whose epoch iterates over `D_n` plus the buffer.
    /// A-GEM instead loads its replay batch separately per iteration.
    pub fn replays_jointly(self) -> bool {
        self.uses_buffer() && !matches!(self, StrategyKind::Agem | StrategyKind::AgemPlus)
    }
}

/// Replay-buffer size: an absolute count or a fraction of the old train split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BufferSize {
    Count(usize),
    Fraction(f64),
}

impl<'de> Deserialize<'de> for BufferSize {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = BufferSize;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an integer count or a fractional buffer size")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<BufferSize, E> {
                if v < 1 {
                    return Err(E::custom("buffer count must be >= 1"));
                }
                Ok(BufferSize::Count(v as usize))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<BufferSize, E> {
                self.visit_i64(v as i64)
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<BufferSize, E> {
                Ok(BufferSize::Fraction(v))
            }
        }
        de.deserialize_any(V)
    }
}

/// All strategy hyperparameters. Defaults: K = 5% of the old train split,
/// n = 10 epochs between resamplings, EWC lambda = 0.4, GSS parameter
/// fraction = 1%, low-LR factor = 0.3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    #[serde(default = "default_k")]
    pub k: BufferSize,
    /// Fraction of the old train split considered for retrieval (the D-pool).
    #[serde(default = "default_d_fraction")]
    pub d_fraction: f64,
    /// Epochs between buffer resamplings for periodic strategies.
    #[serde(default = "default_n_resample")]
    pub n_resample: usize,
    /// Finetuning learning rate override; low-lr defaults to 0.3x base.
    #[serde(default)]
    pub lr_override: Option<f64>,
    #[serde(default = "default_ewc_lambda")]
    pub ewc_lambda: f64,
    #[serde(default = "default_gss_param_fraction")]
    pub gss_param_fraction: f64,
}

fn default_k() -> BufferSize {
    BufferSize::Fraction(0.05)
}
fn default_d_fraction() -> f64 {
    1.0
}
fn default_n_resample() -> usize {
    10
}
fn default_ewc_lambda() -> f64 {
    0.4
}
fn default_gss_param_fraction() -> f64 {
    0.01
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            k: default_k(),
            d_fraction: default_d_fraction(),
            n_resample: default_n_resample(),
            lr_override: None,
            ewc_lambda: default_ewc_lambda(),
            gss_param_fraction: default_gss_param_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_fraction > 0.0 && self.d_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "d_fraction must be in (0, 1], got {}",
                self.d_fraction
            )));
        }
        if self.n_resample < 1 {
            return Err(Error::InvalidConfig("n_resample must be >= 1".into()));
        }
        if let BufferSize::Fraction(f) = self.k {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "fractional k must be in (0, 1], got {f}"
                )));
            }
        }
        if let Some(lr) = self.lr_override {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::InvalidConfig(format!("lr_override must be > 0, got {lr}")));
            }
        }
        if self.ewc_lambda < 0.0 {
            return Err(Error::InvalidConfig("ewc_lambda must be >= 0".into()));
        }
        if !(self.gss_param_fraction > 0.0 && self.gss_param_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gss_param_fraction must be in (0, 1], got {}",
                self.gss_param_fraction
            )));
        }
        Ok(())
    }

    /// Buffer size in samples, relative to the full old train split.
    pub fn resolved_k(&self, old_train_len: usize) -> usize {
        match self.k {
            BufferSize::Count(c) => c,
            BufferSize::Fraction(f) => ((f * old_train_len as f64).round() as usize).max(1),
        }
    }

    /// Learning rate this strategy finetunes with.
    pub fn effective_lr(&self, base_lr: f64) -> f64 {
        match self.lr_override {
            Some(lr) => lr,
            None if self.kind == StrategyKind::LowLr => base_lr * 0.3,
            None => base_lr,
        }
    }
}

/// Read-only context shared with every hook.
pub struct StrategyEnv<'a> {
    pub model: &'a ModelConfig,
    /// The D-pool: the old-train subset considered for retrieval.
    pub old_pool: &'a Dataset,
    /// The full old train split (EWC estimates its Fisher over all of it).
    pub old_train_full: &'a Dataset,
    pub new_train: &'a Dataset,
    pub batch_size: usize,
    pub threads: usize,
}

/// The four hooks the trainer drives.
pub trait Strategy {
    fn kind(&self) -> StrategyKind;

    /// One-time setup: initial random buffer, Fisher estimation, MIR ledger.
    fn on_finetune_start(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        ledger: &mut TimingLedger,
    ) -> Result<()>;

    /// Called at every epoch boundary with the number of completed epochs
    /// (0 before the first epoch). Returns the new buffer when this
    /// strategy's schedule fires.
    fn on_epoch_start(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        epoch_completed: usize,
        last_grad: Option<&GradVector>,
        ledger: &mut TimingLedger,
    ) -> Result<Option<ReplayBuffer>>;

    /// Sample IDs one epoch iterates over, before shuffling.
    fn batch_source(&self, env: &StrategyEnv) -> Vec<u64>;

    /// Gradient transform applied before each SGD step (projection, penalty).
    fn transform_gradient(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        grad: GradVector,
        ledger: &mut TimingLedger,
    ) -> Result<GradVector>;

    fn active_buffer(&self) -> Option<&ReplayBuffer>;
}

/// Periodic schedule shared by gmir, gmir-plus, random-resampling, gss and
/// agem-plus: fire after every n-th completed epoch. The boundary after the
/// final epoch never occurs, so no event is wasted on an untrained buffer.
pub fn periodic_resample_due(epoch_completed: usize, n_resample: usize) -> bool {
    epoch_completed > 0 && epoch_completed.is_multiple_of(n_resample)
}

/// Instantiates a strategy. `resolved_k` is the buffer size in samples.
pub fn build_strategy(
    config: &StrategyConfig,
    resolved_k: usize,
    seed: u64,
) -> Result<Box<dyn Strategy>> {
    config.validate()?;
    Ok(match config.kind {
        StrategyKind::Naive | StrategyKind::LowLr => Box::new(NoReplayStrategy::new(config.kind)),
        StrategyKind::Ewc => Box::new(EwcStrategy::new(config.ewc_lambda)),
        StrategyKind::Agem | StrategyKind::AgemPlus => {
            Box::new(AgemStrategy::new(config.kind, resolved_k, config.n_resample, seed))
        }
        _ => Box::new(BufferedReplayStrategy::new(config.clone(), resolved_k, seed)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_labels_round_trip() {
        for kind in [
            StrategyKind::Naive,
            StrategyKind::LowLr,
            StrategyKind::Ewc,
            StrategyKind::MirEpoch,
            StrategyKind::Agem,
            StrategyKind::AgemPlus,
            StrategyKind::Gss,
            StrategyKind::FixedSampling,
            StrategyKind::RandomResampling,
            StrategyKind::Gmir,
            StrategyKind::GmirPlus,
        ] {
            assert_eq!(StrategyKind::parse(kind.label()).unwrap(), kind);
        }
        assert!(StrategyKind::parse("nope").is_err());
    }

    #[test]
    fn buffer_size_resolves_counts_and_fractions() {
        let mut cfg = StrategyConfig::new(StrategyKind::Gmir);
        assert_eq!(cfg.resolved_k(3631), 182); // 5% of 3631, rounded
        cfg.k = BufferSize::Count(180);
        assert_eq!(cfg.resolved_k(3631), 180);
        cfg.k = BufferSize::Fraction(0.0001);
        assert_eq!(cfg.resolved_k(100), 1); // clamped to >= 1
    }

    #[test]
    fn low_lr_defaults_to_a_third_of_base() {
        let cfg = StrategyConfig::new(StrategyKind::LowLr);
        assert!((cfg.effective_lr(0.01) - 0.003).abs() < 1e-12);
        let naive = StrategyConfig::new(StrategyKind::Naive);
        assert_eq!(naive.effective_lr(0.01), 0.01);
    }

    #[test]
    fn periodic_schedule_fires_on_multiples_only() {
        let fired: Vec<usize> = (0..80).filter(|&e| periodic_resample_due(e, 10)).collect();
        assert_eq!(fired, vec![10, 20, 30, 40, 50, 60, 70]);
        assert!(!periodic_resample_due(0, 1));
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let mut cfg = StrategyConfig::new(StrategyKind::Gmir);
        cfg.d_fraction = 0.0;
        assert!(cfg.validate().is_err());
        cfg.d_fraction = 1.0;
        cfg.n_resample = 0;
        assert!(cfg.validate().is_err());
        cfg.n_resample = 10;
        cfg.gss_param_fraction = 1.5;
        assert!(cfg.validate().is_err());
    }
}
