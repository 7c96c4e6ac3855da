//! Naive and low-LR finetuning: no buffer, no transform. The learning-rate
//! difference is applied by the trainer via `StrategyConfig::effective_lr`.

use super::{Strategy, StrategyEnv, StrategyKind};
use crate::error::Result;
use crate::net::{GradVector, ParamVector};
use crate::replay::ReplayBuffer;
use crate::timing::TimingLedger;

pub struct NoReplayStrategy {
    kind: StrategyKind,
}

impl NoReplayStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self { kind }
    }
}

impl Strategy for NoReplayStrategy {
    fn kind(&self) -> StrategyKind {
        self.kind
    }

    fn on_finetune_start(
        &mut self,
        _env: &StrategyEnv,
        _params: &ParamVector,
        _ledger: &mut TimingLedger,
    ) -> Result<()> {
        Ok(())
    }

    fn on_epoch_start(
        &mut self,
        _env: &StrategyEnv,
        _params: &ParamVector,
        _epoch_completed: usize,
        _last_grad: Option<&GradVector>,
        _ledger: &mut TimingLedger,
    ) -> Result<Option<ReplayBuffer>> {
        Ok(None)
    }

    fn batch_source(&self, env: &StrategyEnv) -> Vec<u64> {
        env.new_train.ids().collect()
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
        None
    }
}
