//! Buffer-based replay strategies that jointly finetune on the new-domain
//! split plus the current buffer: gmir, gmir-plus, mir-epoch, gss,
//! fixed-sampling and random-resampling. They differ only in how and when the
//! buffer is repopulated.

use std::collections::BTreeMap;

use super::{gss::gss_select, mir::mir_epoch_select, periodic_resample_due};
use super::{Strategy, StrategyConfig, StrategyEnv, StrategyKind};
use crate::error::{Error, Result};
use crate::net::{self, GradVector, ParamVector};
use crate::replay::{average_gradient_threaded, gmir_select, random_select, ReplayBuffer};
use crate::seeds;
use crate::timing::TimingLedger;

pub struct BufferedReplayStrategy {
    config: StrategyConfig,
    k: usize,
    seed: u64,
    buffer: Option<ReplayBuffer>,
    /// MIR only: last epoch's per-sample losses over the pool.
    losses_prev: Option<BTreeMap<u64, f64>>,
    /// GSS only: the restricted coordinate seed, fixed per run.
    gss_coord_seed: u64,
}

impl BufferedReplayStrategy {
    pub fn new(config: StrategyConfig, k: usize, seed: u64) -> Self {
        debug_assert!(config.kind.replays_jointly());
        Self {
            gss_coord_seed: seeds::derive(seed, "gss-params", 0),
            config,
            k,
            seed,
            buffer: None,
            losses_prev: None,
        }
    }

    fn pool_losses(
        &self,
        env: &StrategyEnv,
        params: &ParamVector,
        ledger: &mut TimingLedger,
    ) -> Result<BTreeMap<u64, f64>> {
        let mut losses = BTreeMap::new();
        for s in env.old_pool.samples() {
            losses.insert(s.id, net::sample_loss(env.model, params, s)?);
        }
        ledger.scoring_forward_passes += env.old_pool.len() as u64;
        Ok(losses)
    }
}

impl Strategy for BufferedReplayStrategy {
    fn kind(&self) -> StrategyKind {
        self.config.kind
    }

    fn on_finetune_start(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        ledger: &mut TimingLedger,
    ) -> Result<()> {
        if self.k > env.old_pool.len() {
            return Err(Error::InvalidConfig(format!(
                "buffer size {} exceeds the retrieval pool of {}",
                self.k,
                env.old_pool.len()
            )));
        }
        self.buffer = Some(random_select(
            env.old_pool,
            self.k,
            seeds::derive(self.seed, "buffer-init", 0),
            0,
        )?);
        if self.config.kind == StrategyKind::MirEpoch {
            self.losses_prev = Some(self.pool_losses(env, params, ledger)?);
        }
        Ok(())
    }

    fn on_epoch_start(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        epoch_completed: usize,
        last_grad: Option<&GradVector>,
        ledger: &mut TimingLedger,
    ) -> Result<Option<ReplayBuffer>> {
        let kind = self.config.kind;
        let new_buffer = match kind {
            StrategyKind::MirEpoch => {
                // Fires at every epoch boundary, comparing against the
                // ledger seeded at finetune start.
                let curr = self.pool_losses(env, params, ledger)?;
                let prev = self.losses_prev.as_ref().expect("ledger seeded at start");
                let buffer = mir_epoch_select(prev, &curr, self.k, epoch_completed)?;
                self.losses_prev = Some(curr);
                Some(buffer)
            }
            StrategyKind::FixedSampling => None,
            _ if !periodic_resample_due(epoch_completed, self.config.n_resample) => None,
            StrategyKind::RandomResampling => Some(random_select(
                env.old_pool,
                self.k,
                seeds::derive(self.seed, "resample", epoch_completed as u64),
                epoch_completed,
            )?),
            StrategyKind::Gss => {
                let buffer = gss_select(
                    env.model,
                    params,
                    env.old_pool,
                    self.k,
                    self.config.gss_param_fraction,
                    self.gss_coord_seed,
                    epoch_completed,
                )?;
                ledger.scoring_sample_grads += env.old_pool.len() as u64;
                Some(buffer)
            }
            StrategyKind::Gmir => {
                let g = last_grad.ok_or_else(|| {
                    Error::InvalidInput("gmir resample without a previous update gradient".into())
                })?;
                let buffer =
                    gmir_select(g, env.model, params, env.old_pool, self.k, epoch_completed, env.threads)?;
                ledger.scoring_sample_grads += env.old_pool.len() as u64;
                Some(buffer)
            }
            StrategyKind::GmirPlus => {
                let g = average_gradient_threaded(env.model, params, env.new_train, env.threads)?;
                ledger.scoring_sample_grads += env.new_train.len() as u64;
                let buffer =
                    gmir_select(&g, env.model, params, env.old_pool, self.k, epoch_completed, env.threads)?;
                ledger.scoring_sample_grads += env.old_pool.len() as u64;
                Some(buffer)
            }
            _ => unreachable!("non-joint strategies are handled elsewhere"),
        };
        if let Some(buffer) = &new_buffer {
            self.buffer = Some(buffer.clone());
        }
        Ok(new_buffer)
    }

    fn batch_source(&self, env: &StrategyEnv) -> Vec<u64> {
        let buffer = self.buffer.as_ref().expect("buffer initialized at start");
        env.new_train
            .ids()
            .chain(buffer.sample_ids.iter().copied())
            .collect()
    }

    fn transform_gradient(
        &mut self,
        _env: &StrategyEnv,
        _params: &ParamVector,
        grad: GradVector,
        _ledger: &mut TimingLedger,
    ) -> Result<GradVector> {
        Ok(grad)
    }

    fn active_buffer(&self) -> Option<&ReplayBuffer> {
        self.buffer.as_ref()
    }
}
