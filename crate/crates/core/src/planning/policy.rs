//! The trainable student planner.
//!
//! A two-stage categorical policy over a closed action space: first a
//! strategy (preserve, sanitize, concretize, halt) from a linear softmax
//! over the context features, then, for concretization, one rewrite entry
//! from a softmax over the knowledge-base candidates. Plan probabilities
//! marginalize over every sampling path that assembles to the same action
//! list, so reported log-probabilities are exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planning::candidates::{enumerate_candidates, filter_for_subcase, Candidate};
use crate::planning::context::{PolicyContext, STRATEGY_COUNT};
use crate::planning::plan::{Plan, Provenance, SearchAction};
use crate::world::KnowledgeBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Preserve,
    Sanitize,
    Concretize,
    Halt,
}

pub const STRATEGIES: [Strategy; STRATEGY_COUNT] = [
    Strategy::Preserve,
    Strategy::Sanitize,
    Strategy::Concretize,
    Strategy::Halt,
];

impl Strategy {
    pub fn index(self) -> usize {
        match self {
            Strategy::Preserve => 0,
            Strategy::Sanitize => 1,
            Strategy::Concretize => 2,
            Strategy::Halt => 3,
        }
    }
}

/// Student policy weights. `slot_weights` holds one per-candidate prior row
/// per strategy; `slot_evidence` scales the snapshot support of each
/// candidate so the slot choice can react to the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub version: u64,
    pub feature_dim: usize,
    pub candidate_count: usize,
    pub strategy_weights: Vec<Vec<f64>>,
    pub slot_weights: Vec<Vec<f64>>,
    pub slot_evidence: Vec<f64>,
}

impl PolicyParams {
    pub fn new(feature_dim: usize, candidate_count: usize) -> Self {
        PolicyParams {
            version: 0,
            feature_dim,
            candidate_count,
            strategy_weights: vec![vec![0.0; feature_dim]; STRATEGY_COUNT],
            slot_weights: vec![vec![0.0; candidate_count]; STRATEGY_COUNT],
            slot_evidence: vec![0.0; STRATEGY_COUNT],
        }
    }

    pub fn check_dims(&self, ctx: &PolicyContext) -> Result<()> {
        if ctx.features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: ctx.features.len(),
            });
        }
        Ok(())
    }

    fn strategy_logit(&self, strategy: usize, features: &[f64]) -> f64 {
        self.strategy_weights[strategy]
            .iter()
            .zip(features)
            .map(|(w, f)| w * f)
            .sum()
    }

    fn slot_logit(&self, strategy: usize, candidate: &Candidate) -> f64 {
        self.slot_weights[strategy][candidate.slot] + self.slot_evidence[strategy] * candidate.evidence
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Gradient of a plan log-probability, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct PolicyGrad {
    pub strategy: Vec<Vec<f64>>,
    pub slot: Vec<Vec<f64>>,
    pub evidence: Vec<f64>,
}

impl PolicyGrad {
    pub fn zeros(params: &PolicyParams) -> Self {
        PolicyGrad {
            strategy: vec![vec![0.0; params.feature_dim]; STRATEGY_COUNT],
            slot: vec![vec![0.0; params.candidate_count]; STRATEGY_COUNT],
            evidence: vec![0.0; STRATEGY_COUNT],
        }
    }

    pub fn add_scaled(&mut self, other: &PolicyGrad, scale: f64) {
        for (row, orow) in self.strategy.iter_mut().zip(&other.strategy) {
            for (g, o) in row.iter_mut().zip(orow) {
                *g += scale * o;
            }
        }
        for (row, orow) in self.slot.iter_mut().zip(&other.slot) {
            for (g, o) in row.iter_mut().zip(orow) {
                *g += scale * o;
            }
        }
        for (g, o) in self.evidence.iter_mut().zip(&other.evidence) {
            *g += scale * o;
        }
    }

    pub fn norm(&self) -> f64 {
        let mut sum = 0.0;
        for row in &self.strategy {
            sum += row.iter().map(|g| g * g).sum::<f64>();
        }
        for row in &self.slot {
            sum += row.iter().map(|g| g * g).sum::<f64>();
        }
        sum += self.evidence.iter().map(|g| g * g).sum::<f64>();
        sum.sqrt()
    }

    pub fn apply(&self, params: &mut PolicyParams, learning_rate: f64) {
        for (row, grow) in params.strategy_weights.iter_mut().zip(&self.strategy) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w += learning_rate * g;
            }
        }
        for (row, grow) in params.slot_weights.iter_mut().zip(&self.slot) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w += learning_rate * g;
            }
        }
        for (w, g) in params.slot_evidence.iter_mut().zip(&self.evidence) {
            *w += learning_rate * g;
        }
    }
}

fn softmax_scaled(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|l| ((l - max) / temperature).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

pub(crate) fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// One way the policy can produce a plan: a strategy plus, for
/// concretization, a candidate choice.
struct Path {
    strategy: usize,
    candidate: Option<usize>,
    actions: Vec<SearchAction>,
}

/// Everything needed to score or sample plans for one context.
struct PlanSpace {
    candidates: Vec<Candidate>,
    available: [bool; STRATEGY_COUNT],
    paths: Vec<Path>,
}

fn assemble_concretize(candidate: &Candidate, query: &str, n_max: usize) -> Vec<SearchAction> {
    let budget = n_max.saturating_sub(usize::from(candidate.filter.is_some())).max(1);
    let mut actions: Vec<SearchAction> = candidate
        .rewrites
        .iter()
        .take(budget)
        .map(SearchAction::rewrite)
        .collect();
    if actions.is_empty() {
        actions.push(SearchAction::rewrite(query));
    }
    if let Some(filter) = &candidate.filter {
        actions.push(filter.clone());
    }
    actions
}

fn plan_space(ctx: &PolicyContext, kb: &KnowledgeBase, n_max: usize) -> Result<PlanSpace> {
    let candidates = filter_for_subcase(
        enumerate_candidates(&ctx.query, &ctx.snapshot, kb),
        &ctx.query,
        ctx.diagnosis.as_ref(),
        kb,
    );
    for c in &candidates {
        if c.slot >= kb.candidate_count() {
            return Err(Error::DimensionMismatch {
                expected: kb.candidate_count(),
                got: c.slot + 1,
            });
        }
    }
    let mut available = ctx.allowed;
    // Concretization is only on the menu when an entry applies, and
    // sanitization only when it actually changes the query; otherwise the
    // path would alias preservation and the strategy choice could never be
    // identified from behavior.
    available[Strategy::Concretize.index()] &= !candidates.is_empty();
    available[Strategy::Sanitize.index()] &= ctx
        .sanitized
        .as_deref()
        .is_some_and(|s| s != ctx.query);

    let mut paths = Vec::new();
    if available[Strategy::Preserve.index()] {
        paths.push(Path {
            strategy: Strategy::Preserve.index(),
            candidate: None,
            actions: vec![SearchAction::rewrite(&ctx.query)],
        });
    }
    if available[Strategy::Sanitize.index()] {
        let text = ctx.sanitized.clone().unwrap_or_else(|| ctx.query.clone());
        paths.push(Path {
            strategy: Strategy::Sanitize.index(),
            candidate: None,
            actions: vec![SearchAction::rewrite(text)],
        });
    }
    if available[Strategy::Concretize.index()] {
        for (i, c) in candidates.iter().enumerate() {
            paths.push(Path {
                strategy: Strategy::Concretize.index(),
                candidate: Some(i),
                actions: assemble_concretize(c, &ctx.query, n_max),
            });
        }
    }
    if available[Strategy::Halt.index()] {
        paths.push(Path {
            strategy: Strategy::Halt.index(),
            candidate: None,
            actions: vec![SearchAction::Halt],
        });
    }
    if paths.is_empty() {
        return Err(Error::OffPolicyPlan(
            "every strategy is masked for this context".into(),
        ));
    }
    Ok(PlanSpace {
        candidates,
        available,
        paths,
    })
}

struct Distributions {
    /// Strategy probabilities, zero where unavailable.
    strategy: Vec<f64>,
    /// Candidate probabilities for the concretize stage.
    slot: Vec<f64>,
}

fn distributions(
    params: &PolicyParams,
    ctx: &PolicyContext,
    space: &PlanSpace,
    temperature: f64,
) -> Distributions {
    let avail: Vec<usize> = (0..STRATEGY_COUNT).filter(|&s| space.available[s]).collect();
    let logits: Vec<f64> = avail
        .iter()
        .map(|&s| params.strategy_logit(s, &ctx.features))
        .collect();
    let probs = softmax_scaled(&logits, temperature);
    let mut strategy = vec![0.0; STRATEGY_COUNT];
    for (&s, &p) in avail.iter().zip(&probs) {
        strategy[s] = p;
    }
    let slot = if space.candidates.is_empty() {
        Vec::new()
    } else {
        let c_idx = Strategy::Concretize.index();
        let logits: Vec<f64> = space
            .candidates
            .iter()
            .map(|c| params.slot_logit(c_idx, c))
            .collect();
        softmax_scaled(&logits, temperature)
    };
    Distributions { strategy, slot }
}

fn path_prob(dist: &Distributions, path: &Path) -> f64 {
    match path.candidate {
        Some(c) => dist.strategy[path.strategy] * dist.slot[c],
        None => dist.strategy[path.strategy],
    }
}

fn provenance(ctx: &PolicyContext) -> Provenance {
    if ctx.blind {
        Provenance::Blind
    } else {
        Provenance::Student
    }
}

/// Samples a plan and returns its exact log-probability. Temperature zero
/// is the deterministic argmax of both stages.
pub fn student_sample<R: Rng>(
    params: &PolicyParams,
    ctx: &PolicyContext,
    kb: &KnowledgeBase,
    temperature: f64,
    n_max: usize,
    rng: &mut R,
) -> Result<(Plan, f64)> {
    params.check_dims(ctx)?;
    let space = plan_space(ctx, kb, n_max)?;
    let prov = provenance(ctx);

    if temperature == 0.0 {
        let path = argmax_path(params, ctx, &space);
        return Ok((
            Plan {
                actions: path.actions.clone(),
                provenance: prov,
            },
            0.0,
        ));
    }

    let dist = distributions(params, ctx, &space, temperature);
    let strategy = sample_categorical(&dist.strategy, rng);
    let candidate = if strategy == Strategy::Concretize.index() && !space.candidates.is_empty() {
        Some(sample_categorical(&dist.slot, rng))
    } else {
        None
    };
    let path = space
        .paths
        .iter()
        .find(|p| p.strategy == strategy && p.candidate == candidate)
        .expect("sampled path exists");
    let plan = Plan {
        actions: path.actions.clone(),
        provenance: prov,
    };
    // Marginal over every path assembling to the same action list, so the
    // value agrees exactly with student_logprob.
    let total: f64 = space
        .paths
        .iter()
        .filter(|p| p.actions == plan.actions)
        .map(|p| path_prob(&dist, p))
        .sum();
    Ok((plan, total.ln()))
}

fn argmax_path<'s>(params: &PolicyParams, ctx: &PolicyContext, space: &'s PlanSpace) -> &'s Path {
    let avail: Vec<usize> = (0..STRATEGY_COUNT).filter(|&s| space.available[s]).collect();
    let logits: Vec<f64> = avail
        .iter()
        .map(|&s| params.strategy_logit(s, &ctx.features))
        .collect();
    let strategy = avail[argmax(&logits)];
    let candidate = if strategy == Strategy::Concretize.index() && !space.candidates.is_empty() {
        let c_idx = Strategy::Concretize.index();
        let logits: Vec<f64> = space
            .candidates
            .iter()
            .map(|c| params.slot_logit(c_idx, c))
            .collect();
        Some(argmax(&logits))
    } else {
        None
    };
    space
        .paths
        .iter()
        .find(|p| p.strategy == strategy && p.candidate == candidate)
        .expect("argmax path exists")
}

/// The argmax strategy for a context, used to compare against the teacher.
pub fn student_argmax_strategy(
    params: &PolicyParams,
    ctx: &PolicyContext,
    kb: &KnowledgeBase,
    n_max: usize,
) -> Result<Strategy> {
    params.check_dims(ctx)?;
    let space = plan_space(ctx, kb, n_max)?;
    let path = argmax_path(params, ctx, &space);
    Ok(STRATEGIES[path.strategy])
}

/// Exact log-probability of a plan under the tempered policy.
pub fn student_logprob(
    params: &PolicyParams,
    ctx: &PolicyContext,
    kb: &KnowledgeBase,
    plan: &Plan,
    temperature: f64,
    n_max: usize,
) -> Result<f64> {
    params.check_dims(ctx)?;
    let space = plan_space(ctx, kb, n_max)?;
    if temperature == 0.0 {
        let path = argmax_path(params, ctx, &space);
        return if path.actions == plan.actions {
            Ok(0.0)
        } else {
            Err(Error::OffPolicyPlan(format!(
                "plan differs from the deterministic argmax for {:?}",
                ctx.query
            )))
        };
    }
    let dist = distributions(params, ctx, &space, temperature);
    let total: f64 = space
        .paths
        .iter()
        .filter(|p| p.actions == plan.actions)
        .map(|p| path_prob(&dist, p))
        .sum();
    if total <= 0.0 {
        return Err(Error::OffPolicyPlan(format!(
            "plan not expressible for query {:?}",
            ctx.query
        )));
    }
    Ok(total.ln())
}

/// Log-probability and its analytic gradient.
pub fn grad_logprob(
    params: &PolicyParams,
    ctx: &PolicyContext,
    kb: &KnowledgeBase,
    plan: &Plan,
    temperature: f64,
    n_max: usize,
) -> Result<(f64, PolicyGrad)> {
    params.check_dims(ctx)?;
    let space = plan_space(ctx, kb, n_max)?;
    let dist = distributions(params, ctx, &space, temperature);
    let matching: Vec<&Path> = space
        .paths
        .iter()
        .filter(|p| p.actions == plan.actions)
        .collect();
    let total: f64 = matching.iter().map(|p| path_prob(&dist, p)).sum();
    if total <= 0.0 {
        return Err(Error::OffPolicyPlan(format!(
            "plan not expressible for query {:?}",
            ctx.query
        )));
    }

    let mut grad = PolicyGrad::zeros(params);
    let inv_t = 1.0 / temperature;
    let c_idx = Strategy::Concretize.index();
    let slot_evidence_mean: f64 = space
        .candidates
        .iter()
        .zip(&dist.slot)
        .map(|(c, p)| c.evidence * p)
        .sum();

    for path in &matching {
        let weight = path_prob(&dist, path) / total;
        // Strategy stage: d log p(s) / d W[s'] = (phi / T) (1[s'=s] - p_s').
        for s in 0..STRATEGY_COUNT {
            if !space.available[s] {
                continue;
            }
            let delta = f64::from(s == path.strategy) - dist.strategy[s];
            for (g, f) in grad.strategy[s].iter_mut().zip(&ctx.features) {
                *g += weight * inv_t * delta * f;
            }
        }
        // Slot stage, concretize paths only.
        if let Some(chosen) = path.candidate {
            for (i, c) in space.candidates.iter().enumerate() {
                let delta = f64::from(i == chosen) - dist.slot[i];
                grad.slot[c_idx][c.slot] += weight * inv_t * delta;
            }
            grad.evidence[c_idx] +=
                weight * inv_t * (space.candidates[chosen].evidence - slot_evidence_mean);
        }
    }
    Ok((total.ln(), grad))
}

/// Query-only planning: the same machinery as `student_sample`, but the
/// context must be blind (snapshot block zeroed).
pub fn blind_rewrite<R: Rng>(
    params: &PolicyParams,
    ctx: &PolicyContext,
    kb: &KnowledgeBase,
    temperature: f64,
    n_max: usize,
    rng: &mut R,
) -> Result<(Plan, f64)> {
    debug_assert!(ctx.blind, "blind_rewrite requires a blind context");
    student_sample(params, ctx, kb, temperature, n_max, rng)
}
