//! Property tests over the numeric invariants.

use proptest::prelude::*;

use easp_core::executor::{reward, ExecutionResult};
use easp_core::planning::{blind_context, student_sample, PolicyParams};
use easp_core::retrieval::{build_index, tokenize, Cost, ScoredItem};
use easp_core::training::group_advantages;
use easp_core::world::{Catalog, Item, KnowledgeBase, RewriteEntry};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scored(id: usize, rel: f64, cvr: f64) -> ScoredItem {
    ScoredItem {
        item: Item {
            id: format!("i{id}"),
            title: "x".into(),
            category: "c".into(),
            brand: "b".into(),
            attributes: Default::default(),
            scenarios: Default::default(),
            price: 1.0,
            quality: 0.5,
        },
        lexical: 1.0,
        relevance: rel,
        cvr: Some(cvr),
    }
}

proptest! {
    #[test]
    fn tokenize_is_lowercase_alphanumeric(text in ".{0,64}") {
        for token in tokenize(&text) {
            prop_assert!(!token.is_empty());
            prop_assert!(token.chars().all(|c| c.is_alphanumeric()));
            // Lowercasing is idempotent (some characters have no lowercase form).
            prop_assert_eq!(token.to_lowercase(), token);
        }
    }

    #[test]
    fn reward_is_bounded(
        scores in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 0..40),
        k in 1usize..40,
        tau in 0.0f64..=1.0,
    ) {
        let result = ExecutionResult {
            items: scores.iter().enumerate().map(|(i, (r, c))| scored(i, *r, *c)).collect(),
            halted: false,
            per_action_counts: vec![scores.len()],
            cost: Cost::default(),
        };
        let r = reward(&result, k, tau);
        prop_assert!((0.0..=1.0).contains(&r), "reward {r}");
    }

    #[test]
    fn below_gate_conversion_never_matters(
        mut scores in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..30),
        idx in 0usize..30,
        new_cvr in 0.0f64..=1.0,
        k in 1usize..30,
    ) {
        let tau = 0.5;
        let idx = idx % scores.len();
        // Force the perturbed item below the gate.
        scores[idx].0 = scores[idx].0.min(0.49);
        let build = |scores: &[(f64, f64)]| ExecutionResult {
            items: scores.iter().enumerate().map(|(i, (r, c))| scored(i, *r, *c)).collect(),
            halted: false,
            per_action_counts: vec![scores.len()],
            cost: Cost::default(),
        };
        let before = reward(&build(&scores), k, tau);
        scores[idx].1 = new_cvr;
        let after = reward(&build(&scores), k, tau);
        prop_assert_eq!(before, after);
    }

    #[test]
    fn swapping_in_a_gated_item_adds_its_share(
        cvr in 0.0f64..=1.0,
        k in 1usize..20,
    ) {
        let mut items: Vec<ScoredItem> = (0..k).map(|i| scored(i, 0.2, 0.9)).collect();
        let before = reward(&ExecutionResult {
            items: items.clone(),
            halted: false,
            per_action_counts: vec![k],
            cost: Cost::default(),
        }, k, 0.5);
        items[0] = scored(99, 0.9, cvr);
        let after = reward(&ExecutionResult {
            items,
            halted: false,
            per_action_counts: vec![k],
            cost: Cost::default(),
        }, k, 0.5);
        prop_assert!((after - before - cvr / k as f64).abs() < 1e-12);
    }

    #[test]
    fn advantages_center_and_shift_invariance(
        rewards in prop::collection::vec(0.0f64..=1.0, 1..32),
        shift in -1.0f64..=1.0,
    ) {
        let a = group_advantages(&rewards);
        let mean: f64 = a.iter().sum::<f64>() / a.len() as f64;
        prop_assert!(mean.abs() < 1e-9);
        let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
        let b = group_advantages(&shifted);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

/// Sampled plans stay well formed under arbitrary weights.
#[test]
fn sampled_plans_are_well_formed() {
    let index = build_index(
        Catalog::from_items(vec![Item {
            id: "a".into(),
            title: "leather pumps".into(),
            category: "pumps".into(),
            brand: "b".into(),
            attributes: Default::default(),
            scenarios: Default::default(),
            price: 1.0,
            quality: 0.5,
        }])
        .unwrap(),
    )
    .unwrap();
    let mut kb = KnowledgeBase::default();
    kb.scenario_map.push(RewriteEntry {
        key: "office".into(),
        rewrites: vec!["leather pumps".into(), "block heels".into()],
        item_tag: Some("officewear".into()),
        prior: 1.0,
    });
    kb.typo_table.insert("offce".into(), "office".into());
    let n_max = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let queries = ["office heels", "offce pumps", "plain words", ""];
    for trial in 0..10_000 {
        let query = queries[trial % queries.len()];
        let ctx = blind_context(query, &kb, &index);
        let mut params = PolicyParams::new(ctx.features.len(), kb.candidate_count());
        for row in params.strategy_weights.iter_mut() {
            for w in row.iter_mut() {
                *w = (trial as f64 * 0.37).sin() * 2.0;
            }
        }
        let (plan, logp) = student_sample(&params, &ctx, &kb, 0.8, n_max, &mut rng).unwrap();
        assert!(plan.is_well_formed(n_max), "plan {plan:?}");
        assert!(logp <= 1e-12, "log-probability {logp}");
    }
}
