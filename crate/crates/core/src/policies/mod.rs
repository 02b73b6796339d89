//! The two setpoint proposers: the droop rules policy and the SAC adaptive policy.

mod adaptive;
mod checkpoint;
mod replay;
mod rules;
mod sac;

pub use adaptive::{encode_observation, ActionMap, AdaptivePolicy, OBSERVATION_SCALE};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use replay::{Experience, ReplayBuffer};
pub use rules::{droop_update, RulesPolicy, RulesPolicyState};
pub use sac::{Mode, Sac, SacConfig, TrainMetrics};

pub use crate::grid::{Setpoint, SetpointProposal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("policy configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
