//! A desk-scale continual-learning lab for replay-based domain-incremental
//! learning.
//!
//! A small feed-forward classifier is pretrained on an "old" synthetic
//! domain, then finetuned on a shifted "new" domain. Finetuning strategies
//! range from naive continuation through regularization (low LR, EWC) and
//! replay baselines (MIR-per-epoch, A-GEM, GSS, fixed/random buffers) to
//! gradient-based maximally interfered retrieval (GMIR), which periodically
//! repopulates the replay buffer with the old-domain samples whose gradients
//! most oppose the current update direction. GMIR+ scores against the
//! average gradient over the whole new-domain split instead of the last
//! minibatch.
//!
//! Everything is deterministic per seed; experiments report backward/forward
//! transfer against scratch-trained lower bounds plus hardware-independent
//! work counters.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod net;
pub mod replay;
pub mod report;
pub mod seeds;
pub mod strategies;
pub mod timing;
pub mod trainer;

pub use config::ExperimentConfig;
pub use data::{Dataset, Domain, DomainSpec, Generator, Sample};
pub use error::{Error, Result};
pub use net::{GradVector, ModelConfig, ParamVector};
pub use replay::{gmir_select, interference_score, InterferenceScore, ReplayBuffer};
pub use strategies::{Strategy, StrategyConfig, StrategyKind};
pub use timing::TimingLedger;
pub use trainer::{finetune, pretrain, Checkpoint, TrainConfig};
