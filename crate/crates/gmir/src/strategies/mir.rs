//! Per-epoch maximally interfered retrieval: replay the samples whose loss
//! increased the most since the previous epoch.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;

/// Ranks samples by `loss_curr - loss_prev` descending (ties by ascending
/// ID) and returns the top K.
pub fn mir_epoch_select(
    losses_prev: &BTreeMap<u64, f64>,
    losses_curr: &BTreeMap<u64, f64>,
    k: usize,
    epoch: usize,
) -> Result<ReplayBuffer> {
    if losses_prev.len() != losses_curr.len()
        || !losses_prev.keys().eq(losses_curr.keys())
    {
        return Err(Error::InvalidInput(
            "loss ledgers cover different sample id sets".into(),
        ));
    }
    if k == 0 || k > losses_curr.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for ledger of {}",
            losses_curr.len()
        )));
    }
    let mut deltas: Vec<(u64, f64)> = losses_curr
        .iter()
        .map(|(&id, &curr)| (id, curr - losses_prev[&id]))
        .collect();
    deltas.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("losses are finite")
            .then(a.0.cmp(&b.0))
    });
    deltas.truncate(k);
    Ok(ReplayBuffer {
        sample_ids: deltas.into_iter().map(|(id, _)| id).collect(),
        selected_at_epoch: epoch,
        scores: None,
    })
}
