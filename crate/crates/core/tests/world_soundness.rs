//! End-to-end soundness of generated worlds: every query class reaches the
//! retrieval state its generator intended, the knowledge base is closed
//! over the catalog, and the teacher's plan reaches the planted targets.

use easp_core::diagnosis::{diagnose, DiagState, DiagnosisConfig, Subcase};
use easp_core::executor::validate_plan;
use easp_core::planning::teacher_plan;
use easp_core::retrieval::{build_index, probe, retrieve, Index, RankParams};
use easp_core::world::{generate_world, GeneratorClass, World, WorldConfig, FIXTURE_QUERIES};
use easp_core::PipelineConfig;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn test_world() -> (World, Index) {
    let cfg = WorldConfig {
        n_items: 1200,
        n_queries: 600,
        simple_fraction: 0.8,
        targets_per_query: 12,
    };
    let world = generate_world(20260808, &cfg).unwrap();
    let index = build_index(world.catalog.clone()).unwrap();
    (world, index)
}

fn expected_outcome(class: GeneratorClass) -> (DiagState, Option<Subcase>) {
    match class {
        GeneratorClass::Specific => (DiagState::Effective, Some(Subcase::None)),
        GeneratorClass::Noise => (DiagState::RecallFailure, Some(Subcase::QueryNoise)),
        GeneratorClass::Void => (DiagState::RecallFailure, Some(Subcase::InventoryVoid)),
        GeneratorClass::Drift => (DiagState::PrecisionFailure, Some(Subcase::EntityDrift)),
        GeneratorClass::Granularity => {
            (DiagState::PrecisionFailure, Some(Subcase::GranularityMismatch))
        }
        GeneratorClass::Attribute => {
            (DiagState::PrecisionFailure, Some(Subcase::AttributeMisalignment))
        }
        GeneratorClass::Scenario | GeneratorClass::DualScenario => {
            (DiagState::PrecisionFailure, Some(Subcase::ScenarioMisalignment))
        }
        GeneratorClass::Negation => (DiagState::PrecisionFailure, Some(Subcase::NegationFailure)),
    }
}

#[test]
fn every_generated_class_diagnoses_as_intended() {
    let (world, index) = test_world();
    let cfg = PipelineConfig::default();
    let diag_cfg = DiagnosisConfig::from(&cfg);
    let mut checked = 0usize;
    for case in &world.queries {
        let Some(class) = case.class else { continue };
        let snapshot = probe(&index, &case.text, cfg.k_probe);
        let d = diagnose(&case.text, &snapshot, &world.kb, &diag_cfg);
        let (state, subcase) = expected_outcome(class);
        assert_eq!(
            d.state, state,
            "query {:?} of class {class:?} diagnosed {:?} {:?}",
            case.text, d.state, d.subcase
        );
        if let Some(subcase) = subcase {
            assert_eq!(
                d.subcase, subcase,
                "query {:?} of class {class:?} diagnosed subcase {:?}",
                case.text, d.subcase
            );
        }
        checked += 1;
    }
    assert_eq!(checked, world.queries.len());
}

#[test]
fn knowledge_base_rewrites_are_closed_over_the_catalog() {
    let (world, index) = test_world();
    for entry in &world.kb.scenario_map {
        for rewrite in &entry.rewrites {
            let hits = retrieve(&index, rewrite, 5);
            assert!(!hits.is_empty(), "rewrite {rewrite:?} retrieves nothing");
        }
    }
    for entry in &world.kb.attribute_map {
        // Templates must retrieve once any pool value is substituted.
        let sample = entry.template.replace("{value}", &entry.default_value);
        let hits = retrieve(&index, &sample, 5);
        assert!(!hits.is_empty(), "template {sample:?} retrieves nothing");
    }
}

#[test]
fn teacher_plans_validate_and_reach_targets() {
    let (world, index) = test_world();
    let cfg = PipelineConfig::default();
    let diag_cfg = DiagnosisConfig::from(&cfg);
    let rank = RankParams {
        tau_rel: cfg.tau_rel,
        price_scale: cfg.price_scale,
        pool_multiple: cfg.pool_multiple,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut validated = 0usize;
    let mut total = 0usize;
    for case in &world.queries {
        let snapshot = probe(&index, &case.text, cfg.k_probe);
        let d = diagnose(&case.text, &snapshot, &world.kb, &diag_cfg);
        let plan = teacher_plan(
            &case.text, &snapshot, &d, &world.kb, &index, 0.0, cfg.n_max, &mut rng,
        );
        let (ok, _) = validate_plan(&index, case, &plan, cfg.k_validate, cfg.min_reward, &rank);
        total += 1;
        validated += usize::from(ok);
    }
    let rate = validated as f64 / total as f64;
    assert!(
        rate > 0.98,
        "only {validated}/{total} teacher plans validated"
    );
}

#[test]
fn fixture_cases_survive_in_every_seed() {
    for seed in [1u64, 99, 4242] {
        let world = generate_world(
            seed,
            &WorldConfig {
                n_items: 600,
                n_queries: 120,
                simple_fraction: 0.7,
                targets_per_query: 12,
            },
        )
        .unwrap();
        for (i, text) in FIXTURE_QUERIES.iter().enumerate() {
            assert_eq!(world.queries[i].text, *text, "seed {seed}");
        }
    }
}
