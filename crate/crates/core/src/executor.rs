//! Plan execution and the gated conversion reward.

use serde::{Deserialize, Serialize};

use crate::planning::Plan;
use crate::retrieval::{full_rank, rank_gated, Cost, Index, RankParams, RelTarget, ScoredItem};
use crate::world::QueryCase;

/// Merged outcome of a plan's parallel actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub items: Vec<ScoredItem>,
    pub halted: bool,
    pub per_action_counts: Vec<usize>,
    pub cost: Cost,
}

impl ExecutionResult {
    pub fn halted() -> Self {
        ExecutionResult {
            items: Vec::new(),
            halted: true,
            per_action_counts: vec![0],
            cost: Cost::default(),
        }
    }
}

/// Runs every rewrite action independently (filters constrain all of them),
/// merges by item id keeping the highest gated score, and returns the top-k
/// under (gated score desc, relevance desc, id asc). Action order never
/// affects the outcome.
pub fn execute_plan(
    index: &Index,
    plan: &Plan,
    target: RelTarget<'_>,
    k: usize,
    params: &RankParams,
) -> ExecutionResult {
    if plan.is_halt() {
        return ExecutionResult::halted();
    }
    let filters = plan.filters();
    let mut merged: Vec<ScoredItem> = Vec::new();
    let mut per_action_counts = Vec::with_capacity(plan.actions.len());
    let mut cost = Cost::default();
    for action in &plan.actions {
        let crate::planning::SearchAction::Rewrite { text } = action else {
            per_action_counts.push(0);
            continue;
        };
        let (items, action_cost) = full_rank(index, text, target, &filters, k, params);
        per_action_counts.push(items.len());
        cost = cost + action_cost;
        for item in items {
            match merged.iter_mut().find(|m| m.item.id == item.item.id) {
                Some(existing) => {
                    // Keep the strongest appearance; the lexical tiebreak
                    // makes the merge independent of action order.
                    let new_key = (item.gated_score(params.tau_rel), item.lexical);
                    let old_key = (existing.gated_score(params.tau_rel), existing.lexical);
                    if new_key > old_key {
                        *existing = item;
                    }
                }
                None => merged.push(item),
            }
        }
    }
    rank_gated(&mut merged, params.tau_rel);
    merged.truncate(k);
    ExecutionResult {
        items: merged,
        halted: false,
        per_action_counts,
        cost,
    }
}

/// Average gated conversion over exactly `k` slots. Items below the
/// relevance gate contribute zero; missing slots also contribute zero but
/// keep the divisor at `k`. A halted execution scores zero.
pub fn reward(result: &ExecutionResult, k: usize, tau_rel: f64) -> f64 {
    if result.halted || k == 0 {
        return 0.0;
    }
    let sum: f64 = result
        .items
        .iter()
        .take(k)
        .map(|s| s.gated_score(tau_rel))
        .sum();
    sum / k as f64
}

/// A plan succeeds when its executed reward clears `min_reward`, or when it
/// halts on a query whose intent is genuinely unreachable.
pub fn validate_plan(
    index: &Index,
    case: &QueryCase,
    plan: &Plan,
    k: usize,
    min_reward: f64,
    params: &RankParams,
) -> (bool, f64) {
    if plan.is_halt() {
        return (case.targets.is_empty(), 0.0);
    }
    let target = RelTarget::for_case(&case.intent, &case.text);
    let result = execute_plan(index, plan, target, k, params);
    let r = reward(&result, k, params.tau_rel);
    (r >= min_reward, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::{Plan, Provenance, SearchAction};
    use crate::retrieval::build_index;
    use crate::world::{Catalog, Intent, Item};
    use std::collections::BTreeSet;

    fn item(id: &str, title: &str, quality: f64) -> Item {
        Item {
            id: id.into(),
            title: title.into(),
            category: "camping gear".into(),
            brand: "b".into(),
            attributes: Default::default(),
            scenarios: Default::default(),
            price: 0.0,
            quality,
        }
    }

    fn params() -> RankParams {
        RankParams {
            tau_rel: 0.5,
            price_scale: 100.0,
            pool_multiple: 4,
        }
    }

    fn scored(id: &str, rel: f64, cvr: f64) -> ScoredItem {
        ScoredItem {
            item: item(id, "x", 0.5),
            lexical: 1.0,
            relevance: rel,
            cvr: Some(cvr),
        }
    }

    #[test]
    fn halt_plan_returns_empty() {
        let index = build_index(Catalog::from_items(vec![item("a", "tent", 0.9)]).unwrap()).unwrap();
        let result = execute_plan(
            &index,
            &Plan::halt(Provenance::Teacher),
            RelTarget::Text("tent"),
            5,
            &params(),
        );
        assert!(result.halted);
        assert!(result.items.is_empty());
    }

    #[test]
    fn single_rewrite_equals_full_rank() {
        let index = build_index(
            Catalog::from_items(vec![item("a", "red tent", 0.9), item("b", "blue tent", 0.5)])
                .unwrap(),
        )
        .unwrap();
        let plan = Plan::identity("tent", Provenance::Identity);
        let result = execute_plan(&index, &plan, RelTarget::Text("tent"), 5, &params());
        let (direct, _) = full_rank(&index, "tent", RelTarget::Text("tent"), &[], 5, &params());
        assert_eq!(result.items, direct);
        assert_eq!(result.per_action_counts, vec![2]);
    }

    #[test]
    fn union_deduplicates_and_order_does_not_matter() {
        let index = build_index(
            Catalog::from_items(vec![
                item("a", "red tent", 0.9),
                item("b", "blue tent", 0.7),
                item("c", "sleeping bag", 0.8),
            ])
            .unwrap(),
        )
        .unwrap();
        let intent = Intent {
            category: Some("camping gear".into()),
            ..Intent::default()
        };
        let forward = Plan {
            actions: vec![SearchAction::rewrite("tent"), SearchAction::rewrite("red tent")],
            provenance: Provenance::Teacher,
        };
        let backward = Plan {
            actions: vec![SearchAction::rewrite("red tent"), SearchAction::rewrite("tent")],
            provenance: Provenance::Teacher,
        };
        let fw = execute_plan(&index, &forward, RelTarget::Intent(&intent), 5, &params());
        let bw = execute_plan(&index, &backward, RelTarget::Intent(&intent), 5, &params());
        assert_eq!(fw.items, bw.items);
        let ids: BTreeSet<&str> = fw.items.iter().map(|s| s.item.id.as_str()).collect();
        assert_eq!(ids, BTreeSet::from(["a", "b"]));
    }

    #[test]
    fn reward_hand_case_is_exact() {
        let result = ExecutionResult {
            items: vec![scored("a", 0.9, 0.3), scored("b", 0.2, 0.9), scored("c", 0.8, 0.6)],
            halted: false,
            per_action_counts: vec![3],
            cost: Cost::default(),
        };
        let r = reward(&result, 3, 0.5);
        assert!((r - 0.3).abs() < 1e-9, "reward {r}");
    }

    #[test]
    fn reward_bounds_and_degenerate_cases() {
        let all_gated = ExecutionResult {
            items: vec![scored("a", 0.1, 0.9), scored("b", 0.2, 0.8)],
            halted: false,
            per_action_counts: vec![2],
            cost: Cost::default(),
        };
        assert_eq!(reward(&all_gated, 2, 0.5), 0.0);
        let perfect = ExecutionResult {
            items: (0..3).map(|i| scored(&format!("i{i}"), 1.0, 1.0)).collect(),
            halted: false,
            per_action_counts: vec![3],
            cost: Cost::default(),
        };
        assert_eq!(reward(&perfect, 3, 0.5), 1.0);
        assert_eq!(reward(&ExecutionResult::halted(), 3, 0.5), 0.0);
    }

    #[test]
    fn missing_slots_keep_the_divisor() {
        let result = ExecutionResult {
            items: vec![scored("a", 0.9, 0.6)],
            halted: false,
            per_action_counts: vec![1],
            cost: Cost::default(),
        };
        assert!((reward(&result, 3, 0.5) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn wrongful_halt_fails_validation() {
        let index = build_index(Catalog::from_items(vec![item("a", "tent", 0.9)]).unwrap()).unwrap();
        let case = QueryCase {
            text: "tent".into(),
            complexity: crate::world::Complexity::Simple,
            intent: Intent::default(),
            targets: BTreeSet::from(["a".to_string()]),
            class: None,
        };
        let (ok, _) = validate_plan(&index, &case, &Plan::halt(Provenance::Teacher), 5, 0.2, &params());
        assert!(!ok);
        let mut void_case = case.clone();
        void_case.targets.clear();
        let (ok, _) = validate_plan(
            &index,
            &void_case,
            &Plan::halt(Provenance::Teacher),
            5,
            0.2,
            &params(),
        );
        assert!(ok);
    }
}
