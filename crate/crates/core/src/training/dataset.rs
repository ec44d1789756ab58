//! Offline plan synthesis.
//!
//! Resamples the query traffic toward complex cases, runs the teacher over
//! each kept query at a positive temperature, and retains only plans whose
//! execution clears the reward bar. The output is the supervised training
//! set, one JSONL record per validated (query, snapshot, diagnosis, plan)
//! tuple.

use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::diagnosis::{diagnose, Diagnosis, DiagnosisConfig};
use crate::error::{Error, Result};
use crate::executor::validate_plan;
use crate::planning::{teacher_plan, Plan};
use crate::retrieval::{probe, Index, RankParams, Snapshot};
use crate::world::{Complexity, KnowledgeBase, QueryCase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub query: String,
    pub snapshot: Snapshot,
    pub diagnosis: Diagnosis,
    pub plan: Plan,
    pub teacher_reward: f64,
}

/// Keeps every complex query and a seeded 10% of the simple ones,
/// preserving original order.
pub fn resample_queries(queries: &[QueryCase], seed: u64) -> Vec<QueryCase> {
    let simple_positions: Vec<usize> = queries
        .iter()
        .enumerate()
        .filter(|(_, q)| q.complexity == Complexity::Simple)
        .map(|(i, _)| i)
        .collect();
    let keep_count = simple_positions.len() / 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = simple_positions.clone();
    for i in (1..shuffled.len()).rev() {
        let j = rng.random_range(0..=i);
        shuffled.swap(i, j);
    }
    let kept: std::collections::BTreeSet<usize> =
        shuffled.into_iter().take(keep_count).collect();
    queries
        .iter()
        .enumerate()
        .filter(|(i, q)| q.complexity == Complexity::Complex || kept.contains(i))
        .map(|(_, q)| q.clone())
        .collect()
}

pub fn synthesize_dataset(
    queries: &[QueryCase],
    index: &Index,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    temperature: f64,
    seed: u64,
) -> Result<Vec<TrainingExample>> {
    let kept = resample_queries(queries, seed);
    let diag_cfg = DiagnosisConfig::from(cfg);
    let rank = RankParams {
        tau_rel: cfg.tau_rel,
        price_scale: cfg.price_scale,
        pool_multiple: cfg.pool_multiple,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut out = Vec::new();
    for case in &kept {
        let snapshot = probe(index, &case.text, cfg.k_probe);
        let diagnosis = diagnose(&case.text, &snapshot, kb, &diag_cfg);
        let mut seen: Vec<Plan> = Vec::new();
        for _ in 0..cfg.samples_per_query {
            let plan = teacher_plan(
                &case.text,
                &snapshot,
                &diagnosis,
                kb,
                index,
                temperature,
                cfg.n_max,
                &mut rng,
            );
            if seen.iter().any(|p| p.actions == plan.actions) {
                continue;
            }
            seen.push(plan.clone());
            let (ok, reward) = validate_plan(index, case, &plan, cfg.k_validate, cfg.min_reward, &rank);
            if !ok {
                continue;
            }
            let reward = if plan.is_halt() { 0.0 } else { reward };
            out.push(TrainingExample {
                query: case.text.clone(),
                snapshot: snapshot.clone(),
                diagnosis: diagnosis.clone(),
                plan,
                teacher_reward: reward,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

pub fn save_dataset(dataset: &[TrainingExample], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for ex in dataset {
        serde_json::to_writer(&mut out, ex)?;
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

pub fn load_dataset(path: &Path) -> Result<Vec<TrainingExample>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: TrainingExample = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(ex);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}
