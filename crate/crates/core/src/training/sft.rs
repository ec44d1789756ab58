//! Supervised policy initialization.
//!
//! Maximum-likelihood fit of the discrete policy on the validated teacher
//! dataset: per-example gradient ascent on the plan log-probability, in a
//! seed-fixed example order, for a fixed number of epochs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::planning::{blind_context, extract_context, grad_logprob, PolicyContext, PolicyParams};
use crate::retrieval::Index;
use crate::training::TrainingExample;
use crate::world::KnowledgeBase;

pub struct SftOutcome {
    pub params: PolicyParams,
    /// Total log-likelihood of the dataset after each epoch.
    pub epoch_log_likelihood: Vec<f64>,
    /// Examples whose plan the policy could not express.
    pub skipped: usize,
}

/// Builds each example's conditioning context once. When `blind` is set the
/// snapshot and diagnosis are withheld, which trains the query-only
/// baseline on the same demonstrations.
pub fn contexts_for(
    dataset: &[TrainingExample],
    kb: &KnowledgeBase,
    index: &Index,
    blind: bool,
) -> Vec<PolicyContext> {
    dataset
        .iter()
        .map(|ex| {
            if blind {
                blind_context(&ex.query, kb, index)
            } else {
                extract_context(&ex.query, &ex.snapshot, &ex.diagnosis, kb, index)
            }
        })
        .collect()
}

pub fn log_likelihood(
    params: &PolicyParams,
    dataset: &[TrainingExample],
    contexts: &[PolicyContext],
    kb: &KnowledgeBase,
    n_max: usize,
) -> f64 {
    dataset
        .iter()
        .zip(contexts)
        .filter_map(|(ex, ctx)| {
            crate::planning::student_logprob(params, ctx, kb, &ex.plan, 1.0, n_max).ok()
        })
        .sum()
}

pub fn sft_fit(
    params: &PolicyParams,
    dataset: &[TrainingExample],
    kb: &KnowledgeBase,
    index: &Index,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    blind: bool,
    n_max: usize,
) -> Result<SftOutcome> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let contexts = contexts_for(dataset, kb, index, blind);

    // Fixed example order per seed, shared by every epoch.
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }

    let mut params = params.clone();
    let mut epoch_log_likelihood = Vec::with_capacity(epochs);
    let mut skipped = 0usize;
    for _ in 0..epochs {
        for &i in &order {
            match grad_logprob(&params, &contexts[i], kb, &dataset[i].plan, 1.0, n_max) {
                Ok((_, grad)) => grad.apply(&mut params, learning_rate),
                Err(Error::OffPolicyPlan(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        params.version += 1;
        epoch_log_likelihood.push(log_likelihood(&params, dataset, &contexts, kb, n_max));
    }
    if skipped >= dataset.len() * epochs.max(1) {
        return Err(Error::AllSkipped);
    }
    Ok(SftOutcome {
        params,
        epoch_log_likelihood,
        skipped,
    })
}
