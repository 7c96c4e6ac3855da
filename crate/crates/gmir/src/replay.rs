//! Gradient-interference scoring and replay-buffer selection.
//!
//! The interference score of an old-domain sample is the negative cosine
//! similarity between the model's current update gradient `g` and that
//! sample's own loss gradient: samples whose gradients oppose the update are
//! the ones the update is actively un-learning, and they score highest.
//! Selection streams one per-sample gradient at a time, so memory stays
//! proportional to the parameter count rather than the pool size.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::net::{self, GradVector, ModelConfig, ParamVector};

/// Gradients with a norm below this are treated as degenerate: a zero
/// gradient cannot interfere, so such samples score -1 (least interfering).
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Interference score of one sample: `-cos` of the angle between the update
/// gradient and the sample gradient, in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceScore {
    pub sample_id: u64,
    pub score: f64,
}

/// The currently selected replay samples plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffer {
    /// Exactly K unique IDs from the old-domain pool.
    pub sample_ids: Vec<u64>,
    /// Completed-epoch count at which this buffer was selected.
    pub selected_at_epoch: usize,
    /// Scores aligned with `sample_ids`, when the selector computed them.
    pub scores: Option<Vec<InterferenceScore>>,
}

impl ReplayBuffer {
    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.sample_ids.contains(&id)
    }
}

/// Negative cosine similarity between two gradients.
///
/// Returns `None` when either norm is below [`DEGENERATE_NORM`]; callers
/// treat that as a score of -1.
pub fn interference_score(g: &GradVector, g_i: &GradVector) -> Option<f64> {
    let ng = g.norm();
    let ni = g_i.norm();
    if ng < DEGENERATE_NORM || ni < DEGENERATE_NORM {
        return None;
    }
    // Clamp against round-off pushing |cos| infinitesimally past 1.
    Some((-g.dot(g_i) / (ng * ni)).clamp(-1.0, 1.0))
}

/// Gradient of one sample's loss at the current parameters.
pub fn per_sample_gradient(
    config: &ModelConfig,
    params: &ParamVector,
    sample: &Sample,
) -> Result<GradVector> {
    net::grad(config, params, &[sample])
}

/// Mean gradient over every sample of a dataset, accumulated streaming in
/// dataset order.
pub fn average_new_domain_gradient(
    config: &ModelConfig,
    params: &ParamVector,
    d_new: &Dataset,
) -> Result<GradVector> {
    average_gradient_threaded(config, params, d_new, 1)
}

/// Mean gradient with optional fan-out. Each worker sums a contiguous chunk;
/// partial sums combine in chunk order, so the result is deterministic for a
/// fixed thread count (and bitwise equal to sequential when `threads == 1`).
pub fn average_gradient_threaded(
    config: &ModelConfig,
    params: &ParamVector,
    d_new: &Dataset,
    threads: usize,
) -> Result<GradVector> {
    if d_new.is_empty() {
        return Err(Error::InvalidInput(
            "average gradient of an empty dataset".into(),
        ));
    }
    let samples = d_new.samples();
    let sums = map_chunks(samples, threads.max(1), |chunk| -> Result<GradVector> {
        let mut acc = GradVector::zeros(params.len());
        for s in chunk {
            let g = per_sample_gradient(config, params, s)?;
            acc.add_scaled(&g, 1.0);
        }
        Ok(acc)
    })?;
    let mut total = GradVector::zeros(params.len());
    for s in sums {
        total.add_scaled(&s, 1.0);
    }
    total.scale(1.0 / samples.len() as f64);
    Ok(total)
}

/// Interference scores for every sample in the pool, in pool order.
///
/// Per-sample gradients are reduced to a scalar immediately and never
/// materialized together. Scores are independent per sample, so parallel
/// scoring is bitwise identical to sequential regardless of thread count.
pub fn score_pool(
    g: &GradVector,
    config: &ModelConfig,
    params: &ParamVector,
    pool: &Dataset,
    threads: usize,
) -> Result<Vec<InterferenceScore>> {
    if g.norm() < DEGENERATE_NORM {
        return Err(Error::InvalidInput(
            "update gradient is degenerate (norm < 1e-12)".into(),
        ));
    }
    let chunks = map_chunks(pool.samples(), threads.max(1), |chunk| {
        chunk
            .iter()
            .map(|s| {
                let g_i = per_sample_gradient(config, params, s)?;
                let score = interference_score(g, &g_i).unwrap_or(-1.0);
                Ok(InterferenceScore {
                    sample_id: s.id,
                    score,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Selects the K most interfering samples from the old-domain pool.
///
/// Ties break by ascending sample ID. The returned buffer carries the scores
/// of the selected samples.
pub fn gmir_select(
    g: &GradVector,
    config: &ModelConfig,
    params: &ParamVector,
    d_old_pool: &Dataset,
    k: usize,
    epoch: usize,
    threads: usize,
) -> Result<ReplayBuffer> {
    if k == 0 || k > d_old_pool.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for pool of {}",
            d_old_pool.len()
        )));
    }
    let mut scores = score_pool(g, config, params, d_old_pool, threads)?;
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are NaN-free")
            .then(a.sample_id.cmp(&b.sample_id))
    });
    scores.truncate(k);
    Ok(ReplayBuffer {
        sample_ids: scores.iter().map(|s| s.sample_id).collect(),
        selected_at_epoch: epoch,
        scores: Some(scores),
    })
}

/// Uniform sample of K IDs without replacement, deterministic per seed.
pub fn random_select(d_old_pool: &Dataset, k: usize, seed: u64, epoch: usize) -> Result<ReplayBuffer> {
    let ids = sample_ids_without_replacement(d_old_pool, k, seed)?;
    Ok(ReplayBuffer {
        sample_ids: ids,
        selected_at_epoch: epoch,
        scores: None,
    })
}

/// Partial Fisher-Yates over the pool's ID list.
pub fn sample_ids_without_replacement(pool: &Dataset, k: usize, seed: u64) -> Result<Vec<u64>> {
    use rand::Rng;
    use rand::SeedableRng;
    if k == 0 || k > pool.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for pool of {}",
            pool.len()
        )));
    }
    let mut ids: Vec<u64> = pool.ids().collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..k {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    ids.truncate(k);
    Ok(ids)
}

/// Applies `f` to contiguous chunks of `items`, on `threads` workers when
/// `threads > 1`, returning the per-chunk results in chunk order.
fn map_chunks<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&[T]) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if threads <= 1 || items.len() <= 1 {
        return Ok(vec![f(items)?]);
    }
    let chunk_size = items.len().div_ceil(threads);
    let chunks: Vec<&[T]> = items.chunks(chunk_size).collect();
    let results: Vec<Result<R>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| scope.spawn(|| f(chunk)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}
