//! The teacher oracle.
//!
//! Maps a diagnosis to its execution path: preserve effective queries,
//! sanitize noisy ones, halt on genuine inventory voids, concretize
//! precision failures. Positive temperature samples among the applicable
//! concretization entries; temperature zero is the deterministic argmax.

use rand::Rng;

use crate::diagnosis::{DiagState, Diagnosis, Subcase};
use crate::planning::candidates::{
    enumerate_candidates, filter_for_subcase, select_argmax, Candidate,
};
use crate::planning::plan::{Plan, Provenance, SearchAction};
use crate::planning::policy::sample_categorical;
use crate::planning::sanitize;
use crate::retrieval::{Index, Snapshot};
use crate::world::KnowledgeBase;

fn assemble(candidate: &Candidate, n_max: usize) -> Plan {
    let budget = n_max
        .saturating_sub(usize::from(candidate.filter.is_some()))
        .max(1);
    let mut actions: Vec<SearchAction> = candidate
        .rewrites
        .iter()
        .take(budget)
        .map(SearchAction::rewrite)
        .collect();
    if let Some(filter) = &candidate.filter {
        actions.push(filter.clone());
    }
    Plan {
        actions,
        provenance: Provenance::Teacher,
    }
}

fn pick<'c, R: Rng>(
    candidates: &'c [Candidate],
    temperature: f64,
    rng: &mut R,
) -> Option<&'c Candidate> {
    if candidates.is_empty() {
        return None;
    }
    if temperature == 0.0 {
        return select_argmax(candidates);
    }
    let scores: Vec<f64> = candidates.iter().map(|c| c.prior + c.evidence).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    Some(&candidates[sample_categorical(&probs, rng)])
}

pub fn teacher_plan<R: Rng>(
    query: &str,
    snapshot: &Snapshot,
    diagnosis: &Diagnosis,
    kb: &KnowledgeBase,
    index: &Index,
    temperature: f64,
    n_max: usize,
    rng: &mut R,
) -> Plan {
    match (diagnosis.state, diagnosis.subcase) {
        (DiagState::Effective, _) => Plan::identity(query, Provenance::Teacher),
        (DiagState::RecallFailure, Subcase::QueryNoise) => match sanitize(query, kb, index) {
            Ok(text) => Plan {
                actions: vec![SearchAction::rewrite(text)],
                provenance: Provenance::Teacher,
            },
            // Synthesis must not crash; fall back to the original query.
            Err(_) => Plan::identity(query, Provenance::Teacher),
        },
        (DiagState::RecallFailure, _) => Plan::halt(Provenance::Teacher),
        (DiagState::PrecisionFailure, _) => {
            let candidates = filter_for_subcase(
                enumerate_candidates(query, snapshot, kb),
                query,
                Some(diagnosis),
                kb,
            );
            match pick(&candidates, temperature, rng) {
                Some(candidate) => assemble(candidate, n_max),
                None => Plan::identity(query, Provenance::Teacher),
            }
        }
    }
}
