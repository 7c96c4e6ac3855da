//! Elastic weight consolidation: a quadratic penalty on drifting away from
//! the pretrained parameters, weighted by a diagonal empirical Fisher
//! estimate of parameter importance.

use serde::{Deserialize, Serialize};

use super::{Strategy, StrategyEnv, StrategyKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::net::{GradVector, ModelConfig, ParamVector};
use crate::replay::{per_sample_gradient, ReplayBuffer};
use crate::timing::TimingLedger;

/// Diagonal empirical Fisher plus the anchor parameters it was estimated at.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherDiagonal {
    values: Vec<f64>,
    reference_params: Vec<f64>,
}

impl FisherDiagonal {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reference_params(&self) -> &[f64] {
        &self.reference_params
    }
}

/// Diagonal empirical Fisher: the mean over samples of the elementwise
/// squared per-sample gradient, evaluated at the pretrained parameters.
pub fn ewc_fisher(
    config: &ModelConfig,
    params_star: &ParamVector,
    d_old_train: &Dataset,
) -> Result<FisherDiagonal> {
    if d_old_train.is_empty() {
        return Err(Error::InvalidInput("fisher over an empty dataset".into()));
    }
    let mut values = vec![0.0; params_star.len()];
    for sample in d_old_train.samples() {
        let g = per_sample_gradient(config, params_star, sample)?;
        for (f, gi) in values.iter_mut().zip(g.values()) {
            *f += gi * gi;
        }
    }
    let inv_n = 1.0 / d_old_train.len() as f64;
    for f in &mut values {
        *f *= inv_n;
    }
    Ok(FisherDiagonal {
        values,
        reference_params: params_star.values().to_vec(),
    })
}

/// Gradient of the penalty `(lambda/2) * sum_j F_j (theta_j - theta*_j)^2`:
/// `lambda * F (theta - theta*)`, elementwise.
pub fn ewc_penalty_grad(params: &ParamVector, fisher: &FisherDiagonal, lambda: f64) -> GradVector {
    assert_eq!(params.len(), fisher.values.len(), "fisher layout mismatch");
    let values = params
        .values()
        .iter()
        .zip(&fisher.reference_params)
        .zip(&fisher.values)
        .map(|((p, p_star), f)| lambda * f * (p - p_star))
        .collect();
    GradVector::from_values(values)
}

pub struct EwcStrategy {
    lambda: f64,
    fisher: Option<FisherDiagonal>,
}

impl EwcStrategy {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, fisher: None }
    }

    pub fn fisher(&self) -> Option<&FisherDiagonal> {
        self.fisher.as_ref()
    }
}

impl Strategy for EwcStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Ewc
    }

    fn on_finetune_start(
        &mut self,
        env: &StrategyEnv,
        params: &ParamVector,
        ledger: &mut TimingLedger,
    ) -> Result<()> {
        self.fisher = Some(ewc_fisher(env.model, params, env.old_train_full)?);
        ledger.scoring_sample_grads += env.old_train_full.len() as u64;
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
        params: &ParamVector,
        mut grad: GradVector,
        _ledger: &mut TimingLedger,
    ) -> Result<GradVector> {
        let fisher = self
            .fisher
            .as_ref()
            .expect("on_finetune_start estimates the fisher first");
        let penalty = ewc_penalty_grad(params, fisher, self.lambda);
        grad.add_scaled(&penalty, 1.0);
        Ok(grad)
    }

    fn active_buffer(&self) -> Option<&ReplayBuffer> {
        None
    }
}
