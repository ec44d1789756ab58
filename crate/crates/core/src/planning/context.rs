//! Policy conditioning context.
//!
//! A fixed-length feature vector extracted from (query, snapshot,
//! diagnosis), plus the raw pieces a policy needs to assemble concrete
//! plans. The query-only variant zeroes every snapshot-derived block, which
//! is exactly what the blind baseline is allowed to see.

use crate::diagnosis::{DiagState, Diagnosis, Subcase};
use crate::planning::sanitize;
use crate::retrieval::{tokenize, Index, Snapshot};
use crate::world::KnowledgeBase;

pub const STRATEGY_COUNT: usize = 4;
pub const FEATURE_DIM: usize = 22;

const STATE_BLOCK: usize = 1;
const SUBCASE_BLOCK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyContext {
    pub features: Vec<f64>,
    pub query: String,
    /// Empty for the query-only planner.
    pub snapshot: Snapshot,
    /// Absent for the query-only planner.
    pub diagnosis: Option<Diagnosis>,
    /// Precomputed sanitization of the query, when it succeeds.
    pub sanitized: Option<String>,
    /// Strategy availability mask (preserve, sanitize, concretize, halt).
    pub allowed: [bool; STRATEGY_COUNT],
    pub blind: bool,
}

fn state_index(state: DiagState) -> usize {
    match state {
        DiagState::Effective => 0,
        DiagState::RecallFailure => 1,
        DiagState::PrecisionFailure => 2,
    }
}

fn subcase_index(subcase: Subcase) -> usize {
    match subcase {
        Subcase::None => 0,
        Subcase::QueryNoise => 1,
        Subcase::InventoryVoid => 2,
        Subcase::EntityDrift => 3,
        Subcase::GranularityMismatch => 4,
        Subcase::NegationFailure => 5,
        Subcase::AttributeMisalignment => 6,
        Subcase::ScenarioMisalignment => 7,
    }
}

fn query_side_features(features: &mut [f64], query: &str, kb: &KnowledgeBase) {
    let tokens = tokenize(query);
    features[17] = f64::from(!kb.matched_rewrite_entries(&tokens).is_empty());
    features[18] = f64::from(!kb.matched_attribute_entries(&tokens).is_empty());
    features[19] = f64::from(crate::diagnosis::has_noise_tokens(&tokens, kb));
    features[20] = f64::from(kb.negation(&tokens).is_some());
    features[21] = (tokens.len().min(10) as f64) / 10.0;
}

pub fn extract_context(
    query: &str,
    snapshot: &Snapshot,
    diagnosis: &Diagnosis,
    kb: &KnowledgeBase,
    index: &Index,
) -> PolicyContext {
    let mut features = vec![0.0; FEATURE_DIM];
    features[0] = 1.0;
    features[STATE_BLOCK + state_index(diagnosis.state)] = 1.0;
    features[SUBCASE_BLOCK + subcase_index(diagnosis.subcase)] = 1.0;
    features[12] = (snapshot.total_hits.min(50) as f64) / 50.0;
    features[13] = snapshot.relevance_stats.mean;
    features[14] = snapshot.relevance_stats.min;
    features[15] = snapshot.relevance_stats.max;
    let token_count = tokenize(query).len().max(1);
    features[16] = snapshot.unmatched_tokens.len() as f64 / token_count as f64;
    query_side_features(&mut features, query, kb);
    PolicyContext {
        features,
        query: query.to_string(),
        snapshot: snapshot.clone(),
        diagnosis: Some(diagnosis.clone()),
        sanitized: sanitize(query, kb, index).ok(),
        allowed: [true; STRATEGY_COUNT],
        blind: false,
    }
}

/// Context conditioned solely on the query: every snapshot-derived feature
/// is zeroed and no diagnosis is attached.
pub fn blind_context(query: &str, kb: &KnowledgeBase, index: &Index) -> PolicyContext {
    let mut features = vec![0.0; FEATURE_DIM];
    features[0] = 1.0;
    query_side_features(&mut features, query, kb);
    PolicyContext {
        features,
        query: query.to_string(),
        snapshot: Snapshot::empty(query),
        diagnosis: None,
        sanitized: sanitize(query, kb, index).ok(),
        allowed: [true; STRATEGY_COUNT],
        blind: true,
    }
}
