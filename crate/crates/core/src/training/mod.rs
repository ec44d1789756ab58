//! Offline synthesis and the two training stages.

mod dataset;
mod grpo;
mod sft;

pub use dataset::{
    load_dataset, resample_queries, save_dataset, synthesize_dataset, TrainingExample,
};
pub use grpo::{
    group_advantages, grpo_step, rollout_rewards, select_grpo_subset, GrpoStats,
};
pub use sft::{contexts_for, log_likelihood, sft_fit, SftOutcome};
