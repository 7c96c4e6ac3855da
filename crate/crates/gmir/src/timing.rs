//! Work accounting for training runs.
//!
//! Wall-clock depends on hardware, so comparisons (and the report files) use
//! hardware-independent work counters; wall-clock is kept on the ledger for
//! logging but never serialized into reports.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Counters for one training run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingLedger {
    /// Number of SGD parameter updates.
    pub train_steps: u64,
    /// Per-sample gradient evaluations spent on training batches.
    pub train_sample_grads: u64,
    /// Per-sample gradient evaluations spent on A-GEM reference batches.
    pub ref_sample_grads: u64,
    /// Per-sample gradient evaluations spent on selection scoring
    /// (interference scores, GSS gradients, Fisher estimation).
    pub scoring_sample_grads: u64,
    /// Per-sample forward passes spent on the MIR loss ledger.
    pub scoring_forward_passes: u64,
    /// Buffer resampling events fired after initialization.
    pub resample_events: u64,
    /// Wall-clock time of the run. Not serialized: reports must be
    /// bit-reproducible.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl TimingLedger {
    /// Total per-sample gradient evaluations of any kind.
    pub fn total_gradient_work(&self) -> u64 {
        self.train_sample_grads + self.ref_sample_grads + self.scoring_sample_grads
    }

    /// Counters only, with wall-clock zeroed; used when comparing runs.
    pub fn counters(&self) -> TimingLedger {
        TimingLedger {
            wall_clock: Duration::ZERO,
            ..self.clone()
        }
    }
}
