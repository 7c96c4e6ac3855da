//! Gradient-based sample selection: keep the buffer diverse by choosing the
//! samples whose gradients have the smallest maximum cosine similarity to any
//! other sample. Gradients are restricted to a random subset of parameter
//! coordinates, fixed once for all samples.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::net::{ModelConfig, ParamVector};
use crate::replay::{per_sample_gradient, InterferenceScore, ReplayBuffer, DEGENERATE_NORM};

/// Selects the K samples with the smallest max pairwise cosine similarity.
///
/// The restricted coordinate set has `ceil(param_fraction * P)` entries drawn
/// without replacement from the parameter indices, seeded so that every
/// scoring pass of a run reuses the same coordinates. A sample with a
/// degenerate restricted gradient scores +1 (never selected preferentially)
/// and is excluded from other samples' maxima. Ties break by ascending ID.
pub fn gss_select(
    config: &ModelConfig,
    params: &ParamVector,
    d_old_pool: &Dataset,
    k: usize,
    param_fraction: f64,
    seed: u64,
    epoch: usize,
) -> Result<ReplayBuffer> {
    if k == 0 || k > d_old_pool.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for pool of {}",
            d_old_pool.len()
        )));
    }
    if !(param_fraction > 0.0 && param_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "param_fraction must be in (0, 1], got {param_fraction}"
        )));
    }

    let coords = coordinate_subset(params.len(), param_fraction, seed);

    // Restricted gradient per sample. Pool sizes are small enough to hold
    // the n x m matrix; the full P-length gradients are still streamed.
    let samples = d_old_pool.samples();
    let mut restricted: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    for s in samples {
        let g = per_sample_gradient(config, params, s)?;
        restricted.push(coords.iter().map(|&c| g.values()[c]).collect());
    }
    let norms: Vec<f64> = restricted
        .iter()
        .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut scores: Vec<InterferenceScore> = Vec::with_capacity(samples.len());
    for i in 0..samples.len() {
        let score = if norms[i] < DEGENERATE_NORM {
            1.0
        } else {
            let mut max_sim = f64::NEG_INFINITY;
            for j in 0..samples.len() {
                if j == i || norms[j] < DEGENERATE_NORM {
                    continue;
                }
                let dot: f64 = restricted[i]
                    .iter()
                    .zip(&restricted[j])
                    .map(|(a, b)| a * b)
                    .sum();
                max_sim = max_sim.max((dot / (norms[i] * norms[j])).clamp(-1.0, 1.0));
            }
            // No non-degenerate peer: nothing to be similar to.
            if max_sim == f64::NEG_INFINITY {
                -1.0
            } else {
                max_sim
            }
        };
        scores.push(InterferenceScore {
            sample_id: samples[i].id,
            score,
        });
    }

    scores.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("similarities are NaN-free")
            .then(a.sample_id.cmp(&b.sample_id))
    });
    scores.truncate(k);
    Ok(ReplayBuffer {
        sample_ids: scores.iter().map(|s| s.sample_id).collect(),
        selected_at_epoch: epoch,
        scores: Some(scores),
    })
}

/// `ceil(fraction * len)` distinct coordinate indices, sorted.
pub fn coordinate_subset(len: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let m = ((fraction * len as f64).ceil() as usize).clamp(1, len);
    let mut indices: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..m {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    indices.truncate(m);
    indices.sort_unstable();
    indices
}
