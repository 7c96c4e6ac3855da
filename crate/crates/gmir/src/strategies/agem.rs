//! Averaged gradient episodic memory: project the update gradient so it does
//! not conflict with a reference gradient computed on a batch of replay
//! samples. The plain variant keeps its random buffer fixed for the whole
//! run; the plus variant randomly resamples it every n epochs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{periodic_resample_due, Strategy, StrategyEnv, StrategyKind};
use crate::error::{Error, Result};
use crate::net::{self, GradVector, ParamVector};
use crate::replay::{random_select, ReplayBuffer, DEGENERATE_NORM};
use crate::seeds;
use crate::timing::TimingLedger;

/// Projects `g` away from conflicting with `g_ref`.
///
/// No-op (bitwise) when the dot product is already nonnegative; otherwise
/// removes the conflicting component so that `<result, g_ref> >= 0` up to
/// round-off. A degenerate `g_ref` skips the projection with a warning.
pub fn agem_project(g: &GradVector, g_ref: &GradVector) -> GradVector {
    let ref_sq = g_ref.dot(g_ref);
    if ref_sq < DEGENERATE_NORM * DEGENERATE_NORM {
        log::warn!("a-gem reference gradient is degenerate; skipping projection");
        return g.clone();
    }
    let dot = g.dot(g_ref);
    if dot >= 0.0 {
        return g.clone();
    }
    let mut out = g.clone();
    out.add_scaled(g_ref, -dot / ref_sq);
    out
}

pub struct AgemStrategy {
    kind: StrategyKind,
    k: usize,
    n_resample: usize,
    seed: u64,
    buffer: Option<ReplayBuffer>,
    ref_rng: ChaCha8Rng,
}

impl AgemStrategy {
    pub fn new(kind: StrategyKind, k: usize, n_resample: usize, seed: u64) -> Self {
        debug_assert!(matches!(kind, StrategyKind::Agem | StrategyKind::AgemPlus));
        Self {
            kind,
            k,
            n_resample,
            seed,
            buffer: None,
            ref_rng: ChaCha8Rng::seed_from_u64(seeds::derive(seed, "agem-ref", 0)),
        }
    }

    /// One reference batch: up to `batch_size` distinct IDs drawn uniformly
    /// from the buffer, advancing the per-iteration RNG stream.
    fn draw_ref_ids(&mut self, batch_size: usize) -> Vec<u64> {
        use rand::Rng;
        let buffer = self.buffer.as_ref().expect("buffer initialized at start");
        let mut ids = buffer.sample_ids.clone();
        let take = batch_size.min(ids.len());
        for i in 0..take {
            let j = self.ref_rng.random_range(i..ids.len());
            ids.swap(i, j);
        }
        ids.truncate(take);
        ids
    }
}

impl Strategy for AgemStrategy {
    fn kind(&self) -> StrategyKind {
        self.kind
    }

    fn on_finetune_start(
        &mut self,
        env: &StrategyEnv,
        _params: &ParamVector,
        _ledger: &mut TimingLedger,
    ) -> Result<()> {
        self.buffer = Some(random_select(
            env.old_pool,
            self.k,
            seeds::derive(self.seed, "buffer-init", 0),
            0,
        )?);
        Ok(())
    }

    fn on_epoch_start(
        &mut self,
        env: &StrategyEnv,
        _params: &ParamVector,
        epoch_completed: usize,
        _last_grad: Option<&GradVector>,
        _ledger: &mut TimingLedger,
    ) -> Result<Option<ReplayBuffer>> {
        if self.kind == StrategyKind::AgemPlus
            && periodic_resample_due(epoch_completed, self.n_resample)
        {
            let buffer = random_select(
                env.old_pool,
                self.k,
                seeds::derive(self.seed, "resample", epoch_completed as u64),
                epoch_completed,
            )?;
            self.buffer = Some(buffer.clone());
            return Ok(Some(buffer));
        }
        Ok(None)
    }

    fn batch_source(&self, env: &StrategyEnv) -> Vec<u64> {
        // A-GEM trains on the new domain only; replay enters through the
        // per-iteration reference batch.
        env.new_train.ids().collect()
    }

    fn transform_gradient(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        grad: GradVector,
        ledger: &mut TimingLedger,
    ) -> Result<GradVector> {
        let ids = self.draw_ref_ids(env.batch_size);
        let batch: Vec<&crate::data::Sample> = ids
            .iter()
            .map(|&id| {
                env.old_pool
                    .by_id(id)
                    .ok_or_else(|| Error::InvalidInput(format!("buffer id {id} not in pool")))
            })
            .collect::<Result<_>>()?;
        let g_ref = net::grad(env.model, params, &batch)?;
        ledger.ref_sample_grads += batch.len() as u64;
        Ok(agem_project(&grad, &g_ref))
    }

    fn active_buffer(&self) -> Option<&ReplayBuffer> {
        self.buffer.as_ref()
    }
}
