//! End-to-end exercise of the command-line surface: every subcommand runs
//! against a small generated world, and the exit-code contract holds.

use std::path::Path;
use std::process::{Command, Output};

fn easp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_easp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("not json: {text}"))
}

#[test]
fn full_cli_flow() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // Small stages so the whole flow stays fast.
    let cfg = serde_json::json!({
        "grpo_steps": 30,
        "grpo_subset": 30,
    });
    std::fs::write(root.join("cfg.json"), cfg.to_string()).unwrap();

    let out = easp(
        &[
            "gen-world", "--seed", "11", "--out", "w", "--items", "600", "--queries", "400",
        ],
        root,
    );
    let v = stdout_json(&out);
    assert_eq!(v["items"], 600);
    assert_eq!(v["queries"], 400);
    for file in ["catalog.jsonl", "queries.jsonl", "kb.json", "world_config.json"] {
        assert!(root.join("w").join(file).exists(), "{file} missing");
    }

    let v = stdout_json(&easp(&["index", "--world", "w"], root));
    assert_eq!(v["items"], 600);
    assert!(v["vocab"].as_u64().unwrap() > 100);

    let v = stdout_json(&easp(
        &["probe", "--world", "w", "--query", "camping"],
        root,
    ));
    assert!(v["total_hits"].as_u64().unwrap() >= 3);
    assert!(v["category_histogram"].is_object());

    // Teacher plan for a fixture query.
    let v = stdout_json(&easp(
        &["plan", "--world", "w", "--query", "laptttop wth 32G"],
        root,
    ));
    assert_eq!(v["diagnosis"]["state"], "RecallFailure");
    assert_eq!(v["plan"]["actions"][0]["text"], "laptop 32GB RAM");

    let v = stdout_json(&easp(
        &[
            "synthesize", "--seed", "11", "--config", "cfg.json", "--world", "w", "--out",
            "dataset.jsonl",
        ],
        root,
    ));
    assert!(v["examples"].as_u64().unwrap() > 20);

    let v = stdout_json(&easp(
        &[
            "train-sft", "--seed", "11", "--config", "cfg.json", "--world", "w", "--dataset",
            "dataset.jsonl", "--out", "sft.json", "--out-blind", "sft_blind.json",
        ],
        root,
    ));
    assert_eq!(v["epochs"], 2);
    assert_eq!(v["skipped"], 0);

    let v = stdout_json(&easp(
        &[
            "train-grpo", "--seed", "11", "--config", "cfg.json", "--world", "w", "--params",
            "sft.json", "--blind-params", "sft_blind.json", "--out", "grpo.json", "--out-blind",
            "grpo_blind.json", "--log", "grpo_log.jsonl",
        ],
        root,
    ));
    assert_eq!(v["steps"], 30);
    let log = std::fs::read_to_string(root.join("grpo_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 30);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(first["advantages"].is_array());
    assert!(first["grad_norm"].is_number());

    let v = stdout_json(&easp(
        &["fit-router", "--config", "cfg.json", "--world", "w", "--out", "router.json"],
        root,
    ));
    assert!(v["accuracy"].as_f64().unwrap() >= 0.95);

    let out = easp(
        &[
            "eval", "--seed", "11", "--config", "cfg.json", "--world", "w", "--params",
            "grpo.json", "--sft-params", "sft.json", "--blind-params", "grpo_blind.json",
            "--router", "router.json", "--out", "report.json", "--complex-only",
        ],
        root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("EASP") && table.contains("Identity"), "{table}");
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("report.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 4);
    let easp_report = &reports[0];
    assert_eq!(easp_report["system"], "EASP");
    assert!(easp_report["rel_at_30"].as_f64().unwrap() >= 0.0);
    assert!(
        easp_report["latency_p75_ms"].as_f64().unwrap()
            <= easp_report["latency_p99_ms"].as_f64().unwrap()
    );
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = easp(&["probe"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = easp(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("bad");
    std::fs::create_dir_all(&world).unwrap();
    std::fs::write(world.join("catalog.jsonl"), "{\"id\":\"a\"}\n").unwrap();
    std::fs::write(world.join("queries.jsonl"), "").unwrap();
    std::fs::write(world.join("kb.json"), "{}").unwrap();
    let out = easp(&["probe", "--world", "bad", "--query", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    // Worlds that cannot satisfy the generator are data errors too.
    let out = easp(
        &["gen-world", "--out", "tiny", "--items", "50", "--queries", "40"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
