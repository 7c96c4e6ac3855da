//! Minimal feed-forward classifier with exact backpropagation.
//!
//! Parameters and gradients live in flat `f64` vectors sharing one layout:
//! for each layer in order, the weight matrix in row-major form
//! (`out_dim` x `in_dim`), then the bias vector (`out_dim`). Hidden layers
//! apply the configured activation; the output layer is linear (logits).
//! Everything here is a pure function of its inputs, so parameter vectors can
//! be shared read-only across scoring workers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed in terms of the activation output `a`.
    /// For relu the subgradient at 0 is taken as 0.
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Architecture of the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 2,
            hidden_dims: vec![32],
            num_classes: 2,
            activation: Activation::Relu,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be >= 1".into()));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig("hidden dims must be >= 1".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("num_classes must be >= 2".into()));
        }
        Ok(())
    }

    /// Layer widths including input and output: `[input, hidden..., classes]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.num_classes);
        dims
    }

    /// Total number of parameters P.
    pub fn param_count(&self) -> usize {
        let dims = self.layer_dims();
        dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Flat vector of all model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

/// Flat gradient with the same layout as [`ParamVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradVector(Vec<f64>);

impl ParamVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl GradVector {
    pub fn zeros(len: usize) -> Self {
        GradVector(vec![0.0; len])
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        GradVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &GradVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += scale * other`, elementwise.
    pub fn add_scaled(&mut self, other: &GradVector, scale: f64) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }
}

/// Draws initial weights uniformly from
/// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` per layer, with
/// zero biases. Deterministic per seed: layers are filled in order, weights
/// row-major before biases.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ParamVector> {
    config.validate()?;
    let dims = config.layer_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(config.param_count());
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            values.push(rng.random_range(-limit..limit));
        }
        values.resize(values.len() + fan_out, 0.0);
    }
    Ok(ParamVector(values))
}

/// Forward pass: returns the logits for one feature vector.
pub fn forward(config: &ModelConfig, params: &ParamVector, features: &[f64]) -> Result<Vec<f64>> {
    check_shapes(config, params, features)?;
    let mut activation = features.to_vec();
    let dims = config.layer_dims();
    let last = dims.len() - 2;
    let mut offset = 0;
    for (l, w) in dims.windows(2).enumerate() {
        let (in_dim, out_dim) = (w[0], w[1]);
        let weights = &params.0[offset..offset + in_dim * out_dim];
        let biases = &params.0[offset + in_dim * out_dim..offset + in_dim * out_dim + out_dim];
        offset += in_dim * out_dim + out_dim;

        let mut next = vec![0.0; out_dim];
        for (o, out) in next.iter_mut().enumerate() {
            let row = &weights[o * in_dim..(o + 1) * in_dim];
            let mut z = biases[o];
            for (wi, xi) in row.iter().zip(&activation) {
                z += wi * xi;
            }
            *out = if l == last { z } else { config.activation.apply(z) };
        }
        activation = next;
    }
    Ok(activation)
}

/// Softmax cross-entropy: `-log softmax(logits)[label]`, computed stably.
pub fn loss(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::InvalidInput(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(log_sum_exp(logits) - logits[label])
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    max + sum.ln()
}

/// Loss of one sample at the given parameters.
pub fn sample_loss(config: &ModelConfig, params: &ParamVector, sample: &Sample) -> Result<f64> {
    let logits = forward(config, params, &sample.features)?;
    loss(&logits, sample.label)
}

/// Gradient of the mean loss over a minibatch, by exact backpropagation.
pub fn grad(config: &ModelConfig, params: &ParamVector, batch: &[&Sample]) -> Result<GradVector> {
    Ok(grad_with_loss(config, params, batch)?.0)
}

/// Like [`grad`], also returning the mean loss of the batch.
pub fn grad_with_loss(
    config: &ModelConfig,
    params: &ParamVector,
    batch: &[&Sample],
) -> Result<(GradVector, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("gradient of an empty batch".into()));
    }
    let mut acc = GradVector::zeros(params.len());
    let mut loss_sum = 0.0;
    for sample in batch {
        loss_sum += accumulate_sample_grad(config, params, sample, &mut acc)?;
    }
    acc.scale(1.0 / batch.len() as f64);
    Ok((acc, loss_sum / batch.len() as f64))
}

/// Backprop for a single sample, accumulated into `acc` (unscaled).
/// Returns the sample's loss.
fn accumulate_sample_grad(
    config: &ModelConfig,
    params: &ParamVector,
    sample: &Sample,
    acc: &mut GradVector,
) -> Result<f64> {
    check_shapes(config, params, &sample.features)?;
    if sample.label >= config.num_classes {
        return Err(Error::InvalidInput(format!(
            "label {} out of range for {} classes",
            sample.label, config.num_classes
        )));
    }
    let dims = config.layer_dims();
    let num_layers = dims.len() - 1;

    // Forward pass, keeping each layer's input (post-activation of the
    // previous layer).
    let mut layer_inputs: Vec<Vec<f64>> = Vec::with_capacity(num_layers);
    let mut activation = sample.features.clone();
    let mut offsets = Vec::with_capacity(num_layers);
    let mut offset = 0;
    for (l, w) in dims.windows(2).enumerate() {
        let (in_dim, out_dim) = (w[0], w[1]);
        offsets.push(offset);
        let weights = &params.0[offset..offset + in_dim * out_dim];
        let biases = &params.0[offset + in_dim * out_dim..offset + in_dim * out_dim + out_dim];
        offset += in_dim * out_dim + out_dim;

        let mut next = vec![0.0; out_dim];
        for (o, out) in next.iter_mut().enumerate() {
            let row = &weights[o * in_dim..(o + 1) * in_dim];
            let mut z = biases[o];
            for (wi, xi) in row.iter().zip(&activation) {
                z += wi * xi;
            }
            *out = if l == num_layers - 1 {
                z
            } else {
                config.activation.apply(z)
            };
        }
        layer_inputs.push(activation);
        activation = next;
    }

    // dL/dlogits for softmax cross-entropy: softmax(logits) - onehot(label).
    let logits = activation;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let denom: f64 = exp.iter().sum();
    let sample_loss = max + denom.ln() - logits[sample.label];
    let mut delta: Vec<f64> = exp.iter().map(|&e| e / denom).collect();
    delta[sample.label] -= 1.0;

    // Backward pass.
    for l in (0..num_layers).rev() {
        let (in_dim, out_dim) = (dims[l], dims[l + 1]);
        let offset = offsets[l];
        let weights = &params.0[offset..offset + in_dim * out_dim];
        let input = &layer_inputs[l];

        let mut d_input = vec![0.0; in_dim];
        for o in 0..out_dim {
            let dz = delta[o];
            let w_row = &weights[o * in_dim..(o + 1) * in_dim];
            let g_row = &mut acc.0[offset + o * in_dim..offset + (o + 1) * in_dim];
            for i in 0..in_dim {
                g_row[i] += dz * input[i];
                d_input[i] += w_row[i] * dz;
            }
            acc.0[offset + in_dim * out_dim + o] += dz;
        }

        if l > 0 {
            // input[] holds the previous layer's activation output.
            for (di, &a) in d_input.iter_mut().zip(input.iter()) {
                *di *= config.activation.grad_from_output(a);
            }
            delta = d_input;
        }
    }
    Ok(sample_loss)
}

/// One SGD step: `params - lr * g`.
pub fn sgd_step(params: &ParamVector, g: &GradVector, lr: f64) -> ParamVector {
    assert_eq!(params.len(), g.len(), "param/grad length mismatch");
    ParamVector(
        params
            .0
            .iter()
            .zip(&g.0)
            .map(|(p, gi)| p - lr * gi)
            .collect(),
    )
}

fn check_shapes(config: &ModelConfig, params: &ParamVector, features: &[f64]) -> Result<()> {
    if params.len() != config.param_count() {
        return Err(Error::InvalidConfig(format!(
            "param vector has {} values, config needs {}",
            params.len(),
            config.param_count()
        )));
    }
    if features.len() != config.input_dim {
        return Err(Error::InvalidConfig(format!(
            "feature vector has {} values, config needs {}",
            features.len(),
            config.input_dim
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Domain;

    fn cfg(input: usize, hidden: Vec<usize>, classes: usize, act: Activation) -> ModelConfig {
        ModelConfig {
            input_dim: input,
            hidden_dims: hidden,
            num_classes: classes,
            activation: act,
        }
    }

    fn sample(features: Vec<f64>, label: usize) -> Sample {
        Sample {
            id: 0,
            features,
            label,
            domain: Domain::Old,
        }
    }

    #[test]
    fn param_count_matches_hand_count() {
        // 2 -> 3 -> 2: 2*3+3 + 3*2+2 = 17
        let c = cfg(2, vec![3], 2, Activation::Relu);
        assert_eq!(c.param_count(), 17);
        assert_eq!(init_params(&c, 0).unwrap().len(), 17);
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let c = ModelConfig::default();
        let a = init_params(&c, 42).unwrap();
        let b = init_params(&c, 42).unwrap();
        assert_eq!(a, b);
        let other = init_params(&c, 43).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn init_biases_are_zero_and_weights_bounded() {
        let c = cfg(2, vec![3], 2, Activation::Relu);
        let p = init_params(&c, 7).unwrap();
        let v = p.values();
        // layout: W0 (6), b0 (3), W1 (6), b1 (2)
        assert!(v[6..9].iter().all(|&b| b == 0.0));
        assert!(v[15..17].iter().all(|&b| b == 0.0));
        let limit0 = (6.0 / 5.0_f64).sqrt();
        assert!(v[..6].iter().all(|&w| w.abs() <= limit0));
    }

    #[test]
    fn zero_params_give_zero_logits() {
        let c = ModelConfig::default();
        let p = ParamVector::from_values(vec![0.0; c.param_count()]);
        let logits = forward(&c, &p, &[0.3, -0.7]).unwrap();
        assert!(logits.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn forward_matches_hand_oracle_relu() {
        // 2-2-2, W0=[[0.5,-0.3],[0.2,0.8]], b0=[0.1,-0.2],
        // W1=[[1.0,-1.0],[0.25,0.75]], b1=[0.0,0.5], x=[0.6,-0.4].
        let c = cfg(2, vec![2], 2, Activation::Relu);
        let p = ParamVector::from_values(vec![
            0.5, -0.3, 0.2, 0.8, 0.1, -0.2, 1.0, -1.0, 0.25, 0.75, 0.0, 0.5,
        ]);
        let logits = forward(&c, &p, &[0.6, -0.4]).unwrap();
        assert!((logits[0] - 0.52).abs() < 1e-15);
        assert!((logits[1] - 0.63).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn forward_matches_hand_oracle_tanh() {
        let c = cfg(2, vec![2], 2, Activation::Tanh);
        let p = ParamVector::from_values(vec![
            0.5, -0.3, 0.2, 0.8, 0.1, -0.2, 1.0, -1.0, 0.25, 0.75, 0.0, 0.5,
        ]);
        let logits = forward(&c, &p, &[0.6, -0.4]).unwrap();
        assert!((logits[0] - 0.85764897442372301).abs() < 1e-15);
        assert!((logits[1] - 0.3344632813507058).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let c = ModelConfig::default();
        let p = init_params(&c, 0).unwrap();
        assert!(forward(&c, &p, &[1.0]).is_err());
        let short = ParamVector::from_values(vec![0.0; 3]);
        assert!(forward(&c, &short, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn loss_of_uniform_logits_is_ln_c() {
        for classes in 2..6 {
            let logits = vec![0.7; classes];
            let l = loss(&logits, 0).unwrap();
            assert!((l - (classes as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_saturates_to_zero_with_large_margin() {
        let l = loss(&[100.0, 0.0], 0).unwrap();
        assert!((0.0..1e-10).contains(&l));
    }

    #[test]
    fn loss_matches_closed_form() {
        let l = loss(&[1.0, 0.0], 0).unwrap();
        assert!((l - (1.0 + (-1.0_f64).exp()).ln()).abs() < 1e-15);
        assert!((l - 0.31326168751822286).abs() < 1e-15);
    }

    #[test]
    fn loss_rejects_out_of_range_label() {
        assert!(loss(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn singleton_batch_equals_per_sample_grad() {
        let c = ModelConfig::default();
        let p = init_params(&c, 5).unwrap();
        let s = sample(vec![0.4, -0.9], 1);
        let g1 = grad(&c, &p, &[&s]).unwrap();
        let g2 = grad(&c, &p, &[&s, &s]).unwrap(); // duplicated: mean unchanged
        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_grad_is_mean_of_per_sample_grads() {
        let c = ModelConfig::default();
        let p = init_params(&c, 11).unwrap();
        let a = sample(vec![0.4, -0.9], 1);
        let b = sample(vec![-1.2, 0.3], 0);
        let gb = grad(&c, &p, &[&a, &b]).unwrap();
        let ga = grad(&c, &p, &[&a]).unwrap();
        let gbb = grad(&c, &p, &[&b]).unwrap();
        for i in 0..gb.len() {
            let mean = (ga.values()[i] + gbb.values()[i]) / 2.0;
            assert!((gb.values()[i] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_is_finite_on_finite_inputs() {
        let c = cfg(2, vec![4, 3], 3, Activation::Tanh);
        let p = init_params(&c, 3).unwrap();
        let s = sample(vec![100.0, -250.0], 2);
        let g = grad(&c, &p, &[&s]).unwrap();
        assert!(g.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn grad_matches_finite_differences() {
        // Local check; the acceptance suite runs the full 20-draw version
        // with an independently written oracle.
        let c = cfg(3, vec![4], 2, Activation::Tanh);
        let p = init_params(&c, 21).unwrap();
        let s = sample(vec![0.3, -0.2, 0.9], 1);
        let g = grad(&c, &p, &[&s]).unwrap();
        let h = 1e-5;
        for i in 0..p.len() {
            let mut plus = p.values().to_vec();
            plus[i] += h;
            let mut minus = p.values().to_vec();
            minus[i] -= h;
            let lp = sample_loss(&c, &ParamVector::from_values(plus), &s).unwrap();
            let lm = sample_loss(&c, &ParamVector::from_values(minus), &s).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let gi = g.values()[i];
            let denom = gi.abs().max(fd.abs());
            if denom > 1e-7 {
                assert!(
                    ((gi - fd) / denom).abs() < 1e-4,
                    "coord {i}: analytic {gi} vs fd {fd}"
                );
            } else {
                assert!((gi - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sgd_step_arithmetic() {
        let p = ParamVector::from_values(vec![1.0, 1.0]);
        let g = GradVector::from_values(vec![0.5, -0.5]);
        let stepped = sgd_step(&p, &g, 0.1);
        assert_eq!(stepped.values(), &[0.95, 1.05]);
        assert_eq!(sgd_step(&p, &g, 0.0).values(), p.values());
        let zero = GradVector::zeros(2);
        assert_eq!(sgd_step(&p, &zero, 0.1).values(), p.values());
    }
}
