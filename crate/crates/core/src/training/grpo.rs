//! Group-relative policy alignment.
//!
//! For each query the policy samples a group of plans, executes them, and
//! normalizes the group rewards into zero-mean unit-variance advantages.
//! The update direction is the advantage-weighted sum of plan score
//! gradients; no critic and no reference-policy penalty.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::diagnosis::{diagnose, DiagnosisConfig};
use crate::error::Result;
use crate::executor::{execute_plan, reward};
use crate::planning::{
    blind_context, extract_context, grad_logprob, student_sample, PolicyContext, PolicyGrad,
    PolicyParams,
};
use crate::retrieval::{probe, Index, RankParams, RelTarget};
use crate::world::{KnowledgeBase, QueryCase};

const ADVANTAGE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoStats {
    pub step: u64,
    pub query: String,
    pub mean_reward: f64,
    pub group_rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub grad_norm: f64,
}

/// Rewards normalized within the group: (r - mean) / (population std + eps).
/// Degenerate groups (all equal, or a single sample) map to all zeros.
pub fn group_advantages(rewards: &[f64]) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    // Double centering keeps the advantage mean at zero even when the
    // rewards are nearly equal and the first subtraction cancels badly.
    let mut centered: Vec<f64> = rewards.iter().map(|r| r - mean).collect();
    let residual = centered.iter().sum::<f64>() / n;
    for c in &mut centered {
        *c -= residual;
    }
    let variance = centered.iter().map(|c| c * c).sum::<f64>() / n;
    let std = variance.sqrt();
    for c in &mut centered {
        *c /= std + ADVANTAGE_EPS;
    }
    centered
}

fn rollout_context(
    case: &QueryCase,
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    blind: bool,
) -> PolicyContext {
    if blind {
        blind_context(&case.text, kb, index)
    } else {
        let snapshot = probe(index, &case.text, cfg.k_probe);
        let diagnosis = diagnose(&case.text, &snapshot, kb, &DiagnosisConfig::from(cfg));
        extract_context(&case.text, &snapshot, &diagnosis, kb, index)
    }
}

/// Samples a group for one query and returns its rewards.
pub fn rollout_rewards<R: Rng>(
    params: &PolicyParams,
    case: &QueryCase,
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    blind: bool,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let ctx = rollout_context(case, index, kb, cfg, blind);
    let rank = RankParams {
        tau_rel: cfg.tau_rel,
        price_scale: cfg.price_scale,
        pool_multiple: cfg.pool_multiple,
    };
    let target = RelTarget::for_case(&case.intent, &case.text);
    let mut rewards = Vec::with_capacity(cfg.group_size);
    for _ in 0..cfg.group_size {
        let (plan, _) = student_sample(params, &ctx, kb, cfg.temperature, cfg.n_max, rng)?;
        let result = execute_plan(index, &plan, target, cfg.k_validate, &rank);
        rewards.push(reward(&result, cfg.k_validate, cfg.tau_rel));
    }
    Ok(rewards)
}

/// One pass of per-query group updates over `batch`. Returns the updated
/// parameters and one stats record per query.
pub fn grpo_step(
    params: &PolicyParams,
    batch: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    blind: bool,
    step_offset: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(PolicyParams, Vec<GrpoStats>)> {
    let rank = RankParams {
        tau_rel: cfg.tau_rel,
        price_scale: cfg.price_scale,
        pool_multiple: cfg.pool_multiple,
    };
    let mut params = params.clone();
    let mut stats = Vec::with_capacity(batch.len());
    for (i, case) in batch.iter().enumerate() {
        let ctx = rollout_context(case, index, kb, cfg, blind);
        let target = RelTarget::for_case(&case.intent, &case.text);
        let mut plans = Vec::with_capacity(cfg.group_size);
        let mut rewards = Vec::with_capacity(cfg.group_size);
        for _ in 0..cfg.group_size {
            let (plan, _) = student_sample(&params, &ctx, kb, cfg.temperature, cfg.n_max, rng)?;
            let result = execute_plan(index, &plan, target, cfg.k_validate, &rank);
            rewards.push(reward(&result, cfg.k_validate, cfg.tau_rel));
            plans.push(plan);
        }
        let advantages = group_advantages(&rewards);
        let mut update = PolicyGrad::zeros(&params);
        for (plan, advantage) in plans.iter().zip(&advantages) {
            if *advantage == 0.0 {
                continue;
            }
            let (_, grad) = grad_logprob(&params, &ctx, kb, plan, cfg.temperature, cfg.n_max)?;
            update.add_scaled(&grad, *advantage);
        }
        let grad_norm = update.norm();
        update.apply(&mut params, cfg.grpo_learning_rate);
        params.version += 1;
        stats.push(GrpoStats {
            step: step_offset + i as u64,
            query: case.text.clone(),
            mean_reward: rewards.iter().sum::<f64>() / rewards.len().max(1) as f64,
            group_rewards: rewards,
            advantages,
            grad_norm,
        });
    }
    Ok((params, stats))
}

/// Ranks queries by the reward spread of a sampled group and keeps the
/// `top_n` most volatile ones. Position breaks ties.
pub fn select_grpo_subset(
    params: &PolicyParams,
    queries: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    blind: bool,
    top_n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<QueryCase>> {
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(queries.len());
    for (i, case) in queries.iter().enumerate() {
        let rewards = rollout_rewards(params, case, index, kb, cfg, blind, rng)?;
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
        scored.push((i, std));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(top_n)
        .map(|(i, _)| queries[i].clone())
        .collect())
}
