//! Flat pipeline configuration.
//!
//! One documented key set shared by the CLI, the service, and the test
//! fixtures. Every tolerance-bearing knob lives here so experiments can be
//! pinned by a single JSON file.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Probe depth: items inspected by the lightweight retrieval pass.
    pub k_probe: usize,
    /// Serving depth: items returned by plan execution and scored by the
    /// top-K metrics.
    pub k: usize,
    /// Depth used when scoring plans during synthesis, validation, and
    /// policy alignment. Smaller than `k` so rewards keep resolution on
    /// category-sized result sets.
    pub k_validate: usize,
    /// Hard relevance gate threshold.
    pub tau_rel: f64,
    /// Sampling temperature for teacher synthesis and policy rollouts.
    pub temperature: f64,
    /// Group size for group-relative policy updates.
    pub group_size: usize,
    /// Supervised fit epochs.
    pub sft_epochs: usize,
    /// Supervised fit step size.
    pub sft_learning_rate: f64,
    /// Policy-alignment step size.
    pub grpo_learning_rate: f64,
    /// Number of per-query alignment updates.
    pub grpo_steps: usize,
    /// Size of the reward-variance-selected alignment subset.
    pub grpo_subset: usize,
    /// Teacher samples drawn per query during synthesis.
    pub samples_per_query: usize,
    /// Router decision threshold (complex iff score >= threshold).
    pub route_threshold: f64,
    /// Router fit step size.
    pub router_learning_rate: f64,
    /// Router fit epochs.
    pub router_epochs: usize,
    /// Minimum reward for a synthesized plan to count as successful.
    pub min_reward: f64,
    /// Price normalization constant of the conversion model.
    pub price_scale: f64,
    /// Maximum number of actions per plan.
    pub n_max: usize,
    /// Candidate pool for full ranking, as a multiple of `k`.
    pub pool_multiple: usize,
    /// Recall-failure hit threshold.
    pub c_min: usize,
    /// Mean-relevance threshold for the effective state.
    pub r_high: f64,
    /// Minimum fraction of gate-passing probe items for the effective state.
    pub p_good: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_probe: 30,
            k: 30,
            k_validate: 10,
            tau_rel: 0.5,
            temperature: 0.8,
            group_size: 8,
            sft_epochs: 2,
            sft_learning_rate: 0.004,
            grpo_learning_rate: 0.35,
            grpo_steps: 200,
            grpo_subset: 200,
            samples_per_query: 4,
            route_threshold: 0.5,
            router_learning_rate: 4.0,
            router_epochs: 400,
            min_reward: 0.2,
            price_scale: 100.0,
            n_max: 4,
            pool_multiple: 4,
            c_min: 3,
            r_high: 0.7,
            p_good: 0.8,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_file(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
