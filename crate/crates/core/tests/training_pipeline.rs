//! Trains the full stack on a mid-size world and checks the qualitative
//! contracts: the student imitates the teacher after supervised fit, the
//! alignment pass improves held-out reward, and the probe-aware system
//! beats the query-only baseline on the ranking metrics.

use std::sync::OnceLock;

use easp_core::diagnosis::{diagnose, DiagState, DiagnosisConfig, Subcase};
use easp_core::eval::{evaluate, run_pipeline, ParamsBundle, System};
use easp_core::pipeline::{mean_rollout_reward, train_pipeline, TrainedArtifacts};
use easp_core::planning::{extract_context, student_argmax_strategy, Plan, Provenance, Strategy};
use easp_core::retrieval::{build_index, full_rank, Index, RankParams, RelTarget};
use easp_core::training::{
    contexts_for, grpo_step, resample_queries, select_grpo_subset, sft_fit, synthesize_dataset,
};
use easp_core::world::{generate_world, Complexity, QueryCase, World, WorldConfig};
use easp_core::PipelineConfig;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Fixture {
    world: World,
    index: Index,
    cfg: PipelineConfig,
    train: Vec<QueryCase>,
    eval_complex: Vec<QueryCase>,
}

fn fixture() -> Fixture {
    let world_cfg = WorldConfig {
        n_items: 1500,
        n_queries: 2500,
        simple_fraction: 0.8,
        targets_per_query: 12,
    };
    let world = generate_world(98117, &world_cfg).unwrap();
    let index = build_index(world.catalog.clone()).unwrap();
    let cfg = PipelineConfig::default();
    let split = world.queries.len() * 6 / 10;
    let train = world.queries[..split].to_vec();
    let eval_complex: Vec<QueryCase> = world.queries[split..]
        .iter()
        .filter(|q| q.complexity == Complexity::Complex)
        .cloned()
        .collect();
    Fixture {
        world,
        index,
        cfg,
        train,
        eval_complex,
    }
}

fn trained() -> &'static (Fixture, TrainedArtifacts) {
    static TRAINED: OnceLock<(Fixture, TrainedArtifacts)> = OnceLock::new();
    TRAINED.get_or_init(|| {
        let f = fixture();
        let artifacts = train_pipeline(&f.train, &f.index, &f.world.kb, &f.cfg, 31).unwrap();
        (f, artifacts)
    })
}

#[test]
fn trained_stack_obeys_the_qualitative_contracts() {
    let (f, artifacts) = trained();

    // Supervised fit: argmax strategy matches the teacher's path on the
    // training contexts.
    let contexts = contexts_for(&artifacts.dataset, &f.world.kb, &f.index, false);
    let mut agree = 0usize;
    for (ex, ctx) in artifacts.dataset.iter().zip(&contexts) {
        let want = match (ex.diagnosis.state, ex.diagnosis.subcase) {
            (DiagState::Effective, _) => Strategy::Preserve,
            (DiagState::RecallFailure, Subcase::QueryNoise) => Strategy::Sanitize,
            (DiagState::RecallFailure, _) => Strategy::Halt,
            (DiagState::PrecisionFailure, _) => Strategy::Concretize,
        };
        let got =
            student_argmax_strategy(&artifacts.policy_sft, ctx, &f.world.kb, f.cfg.n_max).unwrap();
        agree += usize::from(got == want);
    }
    let rate = agree as f64 / artifacts.dataset.len() as f64;
    assert!(rate >= 0.95, "strategy agreement {rate:.3}");

    // Alignment: held-out mean rollout reward improves.
    let before = mean_rollout_reward(
        &artifacts.policy_sft,
        &f.eval_complex,
        &f.index,
        &f.world.kb,
        &f.cfg,
        false,
        77,
    )
    .unwrap();
    let after = mean_rollout_reward(
        &artifacts.policy,
        &f.eval_complex,
        &f.index,
        &f.world.kb,
        &f.cfg,
        false,
        77,
    )
    .unwrap();
    assert!(
        after > before,
        "alignment did not improve reward: {before:.4} -> {after:.4}"
    );

    // Directional comparison on held-out complex queries.
    let bundle = ParamsBundle {
        policy: &artifacts.policy,
        policy_sft: &artifacts.policy_sft,
        policy_blind: &artifacts.policy_blind,
        router: &artifacts.router,
    };
    let easp = evaluate(
        System::Easp,
        &f.eval_complex,
        &f.index,
        &f.world.kb,
        &bundle,
        &f.cfg,
        31,
    )
    .unwrap();
    let blind = evaluate(
        System::Blind,
        &f.eval_complex,
        &f.index,
        &f.world.kb,
        &bundle,
        &f.cfg,
        31,
    )
    .unwrap();
    let norl = evaluate(
        System::NoRl,
        &f.eval_complex,
        &f.index,
        &f.world.kb,
        &bundle,
        &f.cfg,
        31,
    )
    .unwrap();
    eprintln!(
        "EASP rel {:.2} hr {:.3} | Blind rel {:.2} hr {:.3} | NoRL rel {:.2} hr {:.3} | reward {before:.4}->{after:.4}",
        easp.rel_at_30, easp.hr_at_30, blind.rel_at_30, blind.hr_at_30, norl.rel_at_30, norl.hr_at_30
    );
    assert!(easp.rel_at_30 > blind.rel_at_30, "REL: {easp:?} vs {blind:?}");
    assert!(easp.hr_at_30 > blind.hr_at_30, "HR: {easp:?} vs {blind:?}");
    assert!(easp.hr_at_30 >= norl.hr_at_30, "HR: {easp:?} vs {norl:?}");
}

#[test]
fn pipeline_is_seed_deterministic() {
    let f = fixture();
    let a = train_pipeline(&f.train, &f.index, &f.world.kb, &f.cfg, 7).unwrap();
    let b = train_pipeline(&f.train, &f.index, &f.world.kb, &f.cfg, 7).unwrap();
    assert_eq!(
        serde_json::to_string(&a.policy).unwrap(),
        serde_json::to_string(&b.policy).unwrap()
    );
    assert_eq!(
        serde_json::to_string(&a.policy_blind).unwrap(),
        serde_json::to_string(&b.policy_blind).unwrap()
    );
    assert_eq!(a.dataset, b.dataset);
}

#[test]
fn effective_contexts_prefer_preserve_after_fit() {
    let (f, artifacts) = trained();
    let diag_cfg = DiagnosisConfig::from(&f.cfg);
    let case = &f.world.queries[0];
    let snapshot = easp_core::retrieval::probe(&f.index, &case.text, f.cfg.k_probe);
    let d = diagnose(&case.text, &snapshot, &f.world.kb, &diag_cfg);
    assert_eq!(d.state, DiagState::Effective);
    let ctx = extract_context(&case.text, &snapshot, &d, &f.world.kb, &f.index);
    let got = student_argmax_strategy(&artifacts.policy_sft, &ctx, &f.world.kb, f.cfg.n_max).unwrap();
    assert_eq!(got, Strategy::Preserve);
}

/// The granularity fixture was built so that planning is what surfaces the
/// core items: the raw query cannot reach them at all.
#[test]
fn planning_surfaces_what_identity_cannot() {
    let (f, artifacts) = trained();
    let bundle = ParamsBundle {
        policy: &artifacts.policy,
        policy_sft: &artifacts.policy_sft,
        policy_blind: &artifacts.policy_blind,
        router: &artifacts.router,
    };
    let camping = f
        .world
        .queries
        .iter()
        .find(|q| q.text == "camping")
        .unwrap();
    let easp = run_pipeline(System::Easp, camping, &f.index, &f.world.kb, &bundle, &f.cfg).unwrap();
    let identity =
        run_pipeline(System::Identity, camping, &f.index, &f.world.kb, &bundle, &f.cfg).unwrap();
    let tents = |run: &easp_core::eval::PipelineRun| {
        run.result
            .items
            .iter()
            .filter(|s| s.item.title == "tent")
            .count()
    };
    assert!(tents(&easp) >= 1, "plan found no tents: {:?}", easp.plan);
    assert_eq!(tents(&identity), 0, "raw query reached the core items");
}

#[test]
fn identity_system_is_plain_full_rank() {
    let (f, artifacts) = trained();
    let bundle = ParamsBundle {
        policy: &artifacts.policy,
        policy_sft: &artifacts.policy_sft,
        policy_blind: &artifacts.policy_blind,
        router: &artifacts.router,
    };
    let case = &f.world.queries[0];
    let run = run_pipeline(System::Identity, case, &f.index, &f.world.kb, &bundle, &f.cfg).unwrap();
    assert_eq!(run.plan, Plan::identity(&case.text, Provenance::Identity));
    let rank = RankParams {
        tau_rel: f.cfg.tau_rel,
        price_scale: f.cfg.price_scale,
        pool_multiple: f.cfg.pool_multiple,
    };
    let (direct, _) = full_rank(
        &f.index,
        &case.text,
        RelTarget::for_case(&case.intent, &case.text),
        &[],
        f.cfg.k,
        &rank,
    );
    assert_eq!(run.result.items, direct);
}

/// A query whose every sampled plan scores zero gives zero advantages and
/// therefore cannot move the parameters.
#[test]
fn degenerate_groups_leave_parameters_unchanged() {
    let (f, artifacts) = trained();
    let void = f
        .world
        .queries
        .iter()
        .find(|q| q.text == "brand X water")
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (updated, stats) = grpo_step(
        &artifacts.policy_sft,
        std::slice::from_ref(void),
        &f.index,
        &f.world.kb,
        &f.cfg,
        false,
        0,
        &mut rng,
    )
    .unwrap();
    assert_eq!(stats.len(), 1);
    assert!(stats[0].group_rewards.iter().all(|r| *r == 0.0));
    assert!(stats[0].advantages.iter().all(|a| *a == 0.0));
    assert_eq!(stats[0].grad_norm, 0.0);
    assert_eq!(updated.strategy_weights, artifacts.policy_sft.strategy_weights);
    assert_eq!(updated.slot_weights, artifacts.policy_sft.slot_weights);
}

#[test]
fn zero_temperature_synthesis_dedups_to_one_plan_per_query() {
    let f = fixture();
    let kept = resample_queries(&f.train, 31).len();
    let dataset = synthesize_dataset(&f.train, &f.index, &f.world.kb, &f.cfg, 0.0, 31).unwrap();
    assert!(
        dataset.len() <= kept,
        "{} examples from {kept} kept queries",
        dataset.len()
    );
}

#[test]
fn sft_zero_learning_rate_is_a_no_op() {
    let (f, artifacts) = trained();
    let init = easp_core::planning::PolicyParams::new(
        easp_core::planning::FEATURE_DIM,
        f.world.kb.candidate_count(),
    );
    let out = sft_fit(
        &init,
        &artifacts.dataset,
        &f.world.kb,
        &f.index,
        2,
        0.0,
        1,
        false,
        f.cfg.n_max,
    )
    .unwrap();
    assert_eq!(out.params.strategy_weights, init.strategy_weights);
    assert_eq!(out.params.slot_weights, init.slot_weights);
}

#[test]
fn sft_log_likelihood_is_nondecreasing() {
    let (f, artifacts) = trained();
    let init = easp_core::planning::PolicyParams::new(
        easp_core::planning::FEATURE_DIM,
        f.world.kb.candidate_count(),
    );
    let out = sft_fit(
        &init,
        &artifacts.dataset,
        &f.world.kb,
        &f.index,
        4,
        0.002,
        1,
        false,
        f.cfg.n_max,
    )
    .unwrap();
    for pair in out.epoch_log_likelihood.windows(2) {
        assert!(pair[1] >= pair[0], "log-likelihood regressed: {pair:?}");
    }
}

#[test]
fn subset_selection_is_deterministic_and_complete() {
    let (f, artifacts) = trained();
    let complex: Vec<QueryCase> = f
        .train
        .iter()
        .filter(|q| q.complexity == Complexity::Complex)
        .take(40)
        .cloned()
        .collect();
    let select = |seed: u64, top_n: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        select_grpo_subset(
            &artifacts.policy_sft,
            &complex,
            &f.index,
            &f.world.kb,
            &f.cfg,
            false,
            top_n,
            &mut rng,
        )
        .unwrap()
    };
    let a = select(3, 10);
    let b = select(3, 10);
    assert_eq!(a, b);
    let all = select(3, complex.len());
    assert_eq!(all.len(), complex.len());
    // A query whose plans cannot differ in reward sorts to the back.
    let void_pos = all
        .iter()
        .position(|q| q.class == Some(easp_core::world::GeneratorClass::Void));
    if let Some(pos) = void_pos {
        assert!(pos >= all.len() / 2, "zero-variance query ranked {pos}");
    }
}


/// Seed sweep for the directional contracts. Slow, so opt-in:
/// `cargo test -p easp-core --test training_pipeline -- --ignored --nocapture`
#[test]
#[ignore = "multi-seed sweep, several minutes"]
fn directional_contracts_hold_across_seeds() {
    for seed in [101u64, 202, 303] {
        let world_cfg = WorldConfig {
            n_items: 1500,
            n_queries: 2500,
            simple_fraction: 0.8,
            targets_per_query: 12,
        };
        let world = generate_world(seed, &world_cfg).unwrap();
        let index = build_index(world.catalog.clone()).unwrap();
        let cfg = PipelineConfig::default();
        let split = world.queries.len() * 6 / 10;
        let train = world.queries[..split].to_vec();
        let eval_complex: Vec<QueryCase> = world.queries[split..]
            .iter()
            .filter(|q| q.complexity == Complexity::Complex)
            .cloned()
            .collect();
        let artifacts = train_pipeline(&train, &index, &world.kb, &cfg, seed).unwrap();
        let bundle = ParamsBundle {
            policy: &artifacts.policy,
            policy_sft: &artifacts.policy_sft,
            policy_blind: &artifacts.policy_blind,
            router: &artifacts.router,
        };
        let easp = evaluate(System::Easp, &eval_complex, &index, &world.kb, &bundle, &cfg, seed)
            .unwrap();
        let blind = evaluate(System::Blind, &eval_complex, &index, &world.kb, &bundle, &cfg, seed)
            .unwrap();
        let before = mean_rollout_reward(
            &artifacts.policy_sft, &eval_complex, &index, &world.kb, &cfg, false, seed,
        )
        .unwrap();
        let after = mean_rollout_reward(
            &artifacts.policy, &eval_complex, &index, &world.kb, &cfg, false, seed,
        )
        .unwrap();
        eprintln!(
            "seed {seed}: EASP rel {:.2} hr {:.3} | Blind rel {:.2} hr {:.3} | reward {before:.4} -> {after:.4} (+{:.1}%)",
            easp.rel_at_30,
            easp.hr_at_30,
            blind.rel_at_30,
            blind.hr_at_30,
            100.0 * (after - before) / before
        );
        assert!(easp.rel_at_30 > blind.rel_at_30, "seed {seed}");
        assert!(easp.hr_at_30 > blind.hr_at_30, "seed {seed}");
        assert!(after > before, "seed {seed}");
    }
}
