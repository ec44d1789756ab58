//! Staged training orchestration.
//!
//! Wires the full offline flow behind one call: synthesize validated
//! teacher plans, fit the student and the query-only baseline on them,
//! select the highest reward-variance queries, and run the group-relative
//! alignment pass for both policies. Deterministic for a fixed seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::planning::{PolicyParams, FEATURE_DIM};
use crate::retrieval::Index;
use crate::routing::{fit_router, RouterParams};
use crate::training::{
    grpo_step, select_grpo_subset, sft_fit, synthesize_dataset, GrpoStats, TrainingExample,
};
use crate::world::{Complexity, KnowledgeBase, QueryCase};

pub struct TrainedArtifacts {
    pub dataset: Vec<TrainingExample>,
    /// Supervised-only student.
    pub policy_sft: PolicyParams,
    /// Aligned student.
    pub policy: PolicyParams,
    pub policy_blind_sft: PolicyParams,
    pub policy_blind: PolicyParams,
    pub router: RouterParams,
    pub grpo_log: Vec<GrpoStats>,
}

/// Repeats the alignment subset out to the configured step budget and runs
/// one per-query update per step.
pub fn align_policy(
    params: &PolicyParams,
    subset: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    blind: bool,
    seed: u64,
) -> Result<(PolicyParams, Vec<GrpoStats>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch: Vec<QueryCase> = (0..cfg.grpo_steps)
        .map(|s| subset[s % subset.len()].clone())
        .collect();
    grpo_step(params, &batch, index, kb, cfg, blind, 0, &mut rng)
}

pub fn train_pipeline(
    train_queries: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<TrainedArtifacts> {
    let dataset = synthesize_dataset(train_queries, index, kb, cfg, cfg.temperature, seed)?;

    let init = PolicyParams::new(FEATURE_DIM, kb.candidate_count());
    let sft = sft_fit(
        &init,
        &dataset,
        kb,
        index,
        cfg.sft_epochs,
        cfg.sft_learning_rate,
        seed.wrapping_add(2),
        false,
        cfg.n_max,
    )?;
    let blind_sft = sft_fit(
        &init,
        &dataset,
        kb,
        index,
        cfg.sft_epochs,
        cfg.sft_learning_rate,
        seed.wrapping_add(3),
        true,
        cfg.n_max,
    )?;

    let complex: Vec<QueryCase> = train_queries
        .iter()
        .filter(|q| q.complexity == Complexity::Complex)
        .cloned()
        .collect();
    let top_n = cfg.grpo_subset.min(complex.len()).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
    let subset = select_grpo_subset(&sft.params, &complex, index, kb, cfg, false, top_n, &mut rng)?;
    let (policy, grpo_log) = align_policy(
        &sft.params,
        &subset,
        index,
        kb,
        cfg,
        false,
        seed.wrapping_add(5),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(6));
    let blind_subset = select_grpo_subset(
        &blind_sft.params,
        &complex,
        index,
        kb,
        cfg,
        true,
        top_n,
        &mut rng,
    )?;
    let (policy_blind, _) = align_policy(
        &blind_sft.params,
        &blind_subset,
        index,
        kb,
        cfg,
        true,
        seed.wrapping_add(7),
    )?;

    let labeled: Vec<(String, Complexity)> = train_queries
        .iter()
        .map(|q| (q.text.clone(), q.complexity))
        .collect();
    let router = fit_router(&labeled, kb, index, cfg.router_learning_rate, cfg.router_epochs)?;

    Ok(TrainedArtifacts {
        dataset,
        policy_sft: sft.params,
        policy,
        policy_blind_sft: blind_sft.params,
        policy_blind,
        router,
        grpo_log,
    })
}

/// Mean sampled-group reward of a policy over a query set, the measure the
/// alignment stage optimizes.
pub fn mean_rollout_reward(
    params: &PolicyParams,
    queries: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    blind: bool,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut count = 0usize;
    for case in queries {
        let rewards =
            crate::training::rollout_rewards(params, case, index, kb, cfg, blind, &mut rng)?;
        total += rewards.iter().sum::<f64>();
        count += rewards.len();
    }
    Ok(total / count.max(1) as f64)
}
