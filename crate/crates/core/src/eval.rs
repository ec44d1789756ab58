//! Metrics and end-to-end system evaluation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::diagnosis::{diagnose, Diagnosis, DiagnosisConfig};
use crate::error::Result;
use crate::executor::{execute_plan, reward, ExecutionResult};
use crate::planning::{
    blind_context, extract_context, student_sample, Plan, PolicyParams, Provenance,
};
use crate::retrieval::{probe, Cost, Index, RankParams, RelTarget};
use crate::routing::{route, RoutePath, RouterParams};
use crate::world::{KnowledgeBase, QueryCase};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Count of top-k items above the relevance gate.
pub fn rel_at_k(result: &ExecutionResult, k: usize, tau_rel: f64) -> usize {
    result
        .items
        .iter()
        .take(k)
        .filter(|s| s.relevance >= tau_rel)
        .count()
}

/// Whether any planted target appears in the top-k. Empty targets never
/// count as a hit.
pub fn hit_rate_at_k<'a, I>(result: &ExecutionResult, targets: I, k: usize) -> bool
where
    I: IntoIterator<Item = &'a String>,
{
    let mut targets = targets.into_iter().peekable();
    if targets.peek().is_none() {
        return false;
    }
    let top: Vec<&str> = result
        .items
        .iter()
        .take(k)
        .map(|s| s.item.id.as_str())
        .collect();
    targets.any(|t| top.contains(&t.as_str()))
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum System {
    #[serde(rename = "EASP")]
    Easp,
    #[serde(rename = "Blind")]
    Blind,
    #[serde(rename = "NoRL")]
    NoRl,
    #[serde(rename = "Identity")]
    Identity,
}

impl System {
    pub fn name(&self) -> &'static str {
        match self {
            System::Easp => "EASP",
            System::Blind => "Blind",
            System::NoRl => "NoRL",
            System::Identity => "Identity",
        }
    }
}

/// Trained artifacts the pipelines draw from.
pub struct ParamsBundle<'a> {
    /// Aligned student policy.
    pub policy: &'a PolicyParams,
    /// Supervised-only student policy.
    pub policy_sft: &'a PolicyParams,
    /// Query-only baseline policy.
    pub policy_blind: &'a PolicyParams,
    pub router: &'a RouterParams,
}

/// Per-query run record: the chosen plan, execution outcome, and cost and
/// latency accounting split by pipeline stage.
pub struct PipelineRun {
    pub plan: Plan,
    pub result: ExecutionResult,
    pub diagnosis: Option<Diagnosis>,
    pub route_path: Option<RoutePath>,
    pub probe_cost: Cost,
    pub planner_invocations: u64,
    pub wall_ms: f64,
}

pub fn run_pipeline(
    system: System,
    case: &QueryCase,
    index: &Index,
    kb: &KnowledgeBase,
    bundle: &ParamsBundle<'_>,
    cfg: &PipelineConfig,
) -> Result<PipelineRun> {
    let start = Instant::now();
    let rank = RankParams {
        tau_rel: cfg.tau_rel,
        price_scale: cfg.price_scale,
        pool_multiple: cfg.pool_multiple,
    };
    let target = RelTarget::for_case(&case.intent, &case.text);
    // Plan sampling is deterministic at serving time (temperature zero),
    // but the sampler still wants an rng.
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let mut probe_cost = Cost::default();
    let mut planner_invocations = 0u64;
    let mut diagnosis = None;
    let mut route_path = None;

    let plan = match system {
        System::Identity => Plan::identity(&case.text, Provenance::Identity),
        System::Blind => {
            let ctx = blind_context(&case.text, kb, index);
            planner_invocations += 1;
            let (plan, _) = student_sample(bundle.policy_blind, &ctx, kb, 0.0, cfg.n_max, &mut rng)?;
            plan
        }
        System::Easp | System::NoRl => {
            let decision = route(&case.text, bundle.router, kb, index);
            let path = decision.path;
            route_path = Some(path);
            match path {
                RoutePath::FastPath => Plan::identity(&case.text, Provenance::Identity),
                RoutePath::ComplexPath => {
                    let snapshot = probe(index, &case.text, cfg.k_probe);
                    probe_cost = snapshot.cost;
                    let diag = diagnose(&case.text, &snapshot, kb, &DiagnosisConfig::from(cfg));
                    let ctx = extract_context(&case.text, &snapshot, &diag, kb, index);
                    diagnosis = Some(diag);
                    planner_invocations += 1;
                    let params = match system {
                        System::Easp => bundle.policy,
                        _ => bundle.policy_sft,
                    };
                    let (plan, _) = student_sample(params, &ctx, kb, 0.0, cfg.n_max, &mut rng)?;
                    plan
                }
            }
        }
    };

    let result = execute_plan(index, &plan, target, cfg.k, &rank);
    Ok(PipelineRun {
        plan,
        result,
        diagnosis,
        route_path,
        probe_cost,
        planner_invocations,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Aggregate evaluation report. Wall-clock latency fields are
/// informational; every other field is deterministic for a fixed seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub rel_at_30: f64,
    pub hr_at_30: f64,
    pub mean_reward: f64,
    pub fast_path_fraction: f64,
    pub latency_p75_ms: f64,
    pub latency_p99_ms: f64,
    pub cost_p99: u64,
    pub n_queries: usize,
    pub seed: u64,
}

impl EvalReport {
    /// The reproducible subset, for byte comparison across runs.
    pub fn deterministic_fields(&self) -> String {
        format!(
            "{}|{:.12}|{:.12}|{:.12}|{:.12}|{}|{}|{}",
            self.system,
            self.rel_at_30,
            self.hr_at_30,
            self.mean_reward,
            self.fast_path_fraction,
            self.cost_p99,
            self.n_queries,
            self.seed
        )
    }
}

pub fn evaluate(
    system: System,
    queries: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    bundle: &ParamsBundle<'_>,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<EvalReport> {
    let mut rel_sum = 0.0;
    let mut hits = 0usize;
    let mut reward_sum = 0.0;
    let mut fast = 0usize;
    let mut latencies = Vec::with_capacity(queries.len());
    let mut costs = Vec::with_capacity(queries.len());
    for case in queries {
        let run = run_pipeline(system, case, index, kb, bundle, cfg)?;
        rel_sum += rel_at_k(&run.result, cfg.k, cfg.tau_rel) as f64;
        hits += usize::from(hit_rate_at_k(&run.result, case.targets.iter(), cfg.k));
        reward_sum += reward(&run.result, cfg.k, cfg.tau_rel);
        fast += usize::from(run.route_path == Some(RoutePath::FastPath));
        latencies.push(run.wall_ms);
        costs.push((run.probe_cost.total() + run.result.cost.total()) as f64);
    }
    let n = queries.len().max(1) as f64;
    Ok(EvalReport {
        system: system.name().to_string(),
        rel_at_30: rel_sum / n,
        hr_at_30: hits as f64 / n,
        mean_reward: reward_sum / n,
        fast_path_fraction: fast as f64 / n,
        latency_p75_ms: percentile(&latencies, 75.0),
        latency_p99_ms: percentile(&latencies, 99.0),
        cost_p99: percentile(&costs, 99.0) as u64,
        n_queries: queries.len(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::ScoredItem;
    use crate::world::Item;

    fn item(id: &str) -> Item {
        Item {
            id: id.into(),
            title: "x".into(),
            category: "c".into(),
            brand: "b".into(),
            attributes: Default::default(),
            scenarios: Default::default(),
            price: 1.0,
            quality: 0.5,
        }
    }

    fn result(rels: &[f64]) -> ExecutionResult {
        ExecutionResult {
            items: rels
                .iter()
                .enumerate()
                .map(|(i, r)| ScoredItem {
                    item: item(&format!("i{i}")),
                    lexical: 1.0,
                    relevance: *r,
                    cvr: Some(0.5),
                })
                .collect(),
            halted: false,
            per_action_counts: vec![rels.len()],
            cost: Cost::default(),
        }
    }

    #[test]
    fn rel_at_k_counts_gate_passers() {
        assert_eq!(rel_at_k(&result(&[]), 3, 0.5), 0);
        assert_eq!(rel_at_k(&result(&[0.9, 0.8, 0.7]), 3, 0.5), 3);
        assert_eq!(rel_at_k(&result(&[0.9, 0.4, 0.6]), 3, 0.5), 2);
        // Fewer items than k counts whatever exists.
        assert_eq!(rel_at_k(&result(&[0.9]), 3, 0.5), 1);
    }

    #[test]
    fn hit_rate_boundaries() {
        let r = result(&[0.9, 0.8]);
        let targets = ["i0".to_string()];
        assert!(hit_rate_at_k(&r, targets.iter(), 3));
        let empty: Vec<String> = vec![];
        assert!(!hit_rate_at_k(&r, empty.iter(), 3));
        let beyond = ["i1".to_string()];
        assert!(!hit_rate_at_k(&r, beyond.iter(), 1));
    }

    #[test]
    fn percentile_nearest_rank() {
        let values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert_eq!(percentile(&values, 75.0), 75.0);
        assert_eq!(percentile(&values, 99.0), 99.0);
        assert!(percentile(&values, 75.0) <= percentile(&values, 99.0));
        assert_eq!(percentile(&[5.0], 99.0), 5.0);
    }

    #[test]
    fn system_names_serialize() {
        assert_eq!(serde_json::to_value(System::Easp).unwrap(), "EASP");
        assert_eq!(serde_json::to_value(System::NoRl).unwrap(), "NoRL");
    }
}
