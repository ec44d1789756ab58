//! Perceptual diagnosis of a retrieval snapshot.
//!
//! Classifies a (query, snapshot) pair into exactly one of three mutually
//! exclusive retrieval states, with a failure subcase where applicable. The
//! procedure is a fixed-priority decision list, so the verdict is total and
//! deterministic.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::retrieval::{tokenize, Snapshot};
use crate::world::{fold_plural, KnowledgeBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagState {
    Effective,
    RecallFailure,
    PrecisionFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subcase {
    None,
    QueryNoise,
    InventoryVoid,
    EntityDrift,
    GranularityMismatch,
    NegationFailure,
    AttributeMisalignment,
    ScenarioMisalignment,
}

impl Subcase {
    pub fn belongs_to(self, state: DiagState) -> bool {
        match self {
            Subcase::None => state == DiagState::Effective,
            Subcase::QueryNoise | Subcase::InventoryVoid => state == DiagState::RecallFailure,
            _ => state == DiagState::PrecisionFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub state: DiagState,
    pub subcase: Subcase,
    pub evidence: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisConfig {
    pub c_min: usize,
    pub r_high: f64,
    pub p_good: f64,
    pub tau_rel: f64,
}

impl From<&PipelineConfig> for DiagnosisConfig {
    fn from(cfg: &PipelineConfig) -> Self {
        DiagnosisConfig {
            c_min: cfg.c_min,
            r_high: cfg.r_high,
            p_good: cfg.p_good,
            tau_rel: cfg.tau_rel,
        }
    }
}

/// Result of matching query tokens against the category vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub enum HeadMatch {
    /// First query token matching exactly one category.
    Unique { token: String, category: String },
    /// First matching token is shared by several categories.
    Ambiguous { token: String },
    NoMatch,
}

/// Head-entity extraction: the first query token that names a category.
pub fn head_category(query_tokens: &[String], kb: &KnowledgeBase) -> HeadMatch {
    for token in query_tokens {
        let cats = kb.categories_matching(token);
        match cats.len() {
            0 => continue,
            1 => {
                return HeadMatch::Unique {
                    token: token.clone(),
                    category: cats[0].to_string(),
                }
            }
            _ => {
                return HeadMatch::Ambiguous {
                    token: token.clone(),
                }
            }
        }
    }
    HeadMatch::NoMatch
}

/// True when any query token hits the filler, typo, or unit tables.
pub fn has_noise_tokens(query_tokens: &[String], kb: &KnowledgeBase) -> bool {
    query_tokens.iter().any(|t| {
        kb.filler_lexicon.contains(t) || kb.typo_table.contains_key(t) || kb.unit_table.contains_key(t)
    })
}

pub fn diagnose(
    query: &str,
    snapshot: &Snapshot,
    kb: &KnowledgeBase,
    cfg: &DiagnosisConfig,
) -> Diagnosis {
    let tokens = tokenize(query);
    let mut evidence: Vec<(String, String)> =
        vec![("total_hits".into(), snapshot.total_hits.to_string())];

    // Recall failure dominates every other signal.
    if snapshot.total_hits < cfg.c_min {
        let noisy = has_noise_tokens(&tokens, kb);
        evidence.push(("noise_tokens".into(), noisy.to_string()));
        if !snapshot.unmatched_tokens.is_empty() {
            evidence.push((
                "unmatched_tokens".into(),
                snapshot.unmatched_tokens.join(","),
            ));
        }
        let subcase = if noisy {
            Subcase::QueryNoise
        } else {
            Subcase::InventoryVoid
        };
        return Diagnosis {
            state: DiagState::RecallFailure,
            subcase,
            evidence,
        };
    }

    let stats = snapshot.relevance_stats;
    let good_fraction = if snapshot.top.is_empty() {
        0.0
    } else {
        snapshot
            .top
            .iter()
            .filter(|s| s.relevance >= cfg.tau_rel)
            .count() as f64
            / snapshot.top.len() as f64
    };
    evidence.push(("relevance_mean".into(), format!("{:.4}", stats.mean)));
    evidence.push(("good_fraction".into(), format!("{good_fraction:.4}")));
    if stats.mean >= cfg.r_high && good_fraction >= cfg.p_good {
        return Diagnosis {
            state: DiagState::Effective,
            subcase: Subcase::None,
            evidence,
        };
    }

    // Precision failure: pick the first matching subcase rule.
    let modal = snapshot.modal_category().map(str::to_string);
    if let Some(modal) = &modal {
        evidence.push(("modal_category".into(), modal.clone()));
    }
    let head = head_category(&tokens, kb);

    if let (HeadMatch::Unique { token, category }, Some(modal)) = (&head, &modal) {
        if modal != category {
            evidence.push(("head_token".into(), token.clone()));
            evidence.push(("head_category".into(), category.clone()));
            return Diagnosis {
                state: DiagState::PrecisionFailure,
                subcase: Subcase::EntityDrift,
                evidence,
            };
        }
    }

    if let Some(modal) = &modal {
        let modal_tokens = tokenize(modal);
        let peripheral = modal_tokens
            .iter()
            .any(|t| kb.accessory_markers.contains(t));
        let head_in_modal = match &head {
            HeadMatch::Unique { token, .. } | HeadMatch::Ambiguous { token } => modal_tokens
                .iter()
                .any(|t| fold_plural(t) == fold_plural(token)),
            HeadMatch::NoMatch => true,
        };
        if peripheral && head_in_modal {
            return Diagnosis {
                state: DiagState::PrecisionFailure,
                subcase: Subcase::GranularityMismatch,
                evidence,
            };
        }
    }

    if let Some((_, object)) = kb.negation(&tokens) {
        let observed = snapshot.matched_attribute_values.iter().any(|(_, values)| {
            values
                .iter()
                .any(|v| tokenize(v).iter().any(|t| t == &object))
        });
        if observed {
            evidence.push(("negated_object".into(), object));
            return Diagnosis {
                state: DiagState::PrecisionFailure,
                subcase: Subcase::NegationFailure,
                evidence,
            };
        }
    }

    for idx in kb.matched_attribute_entries(&tokens) {
        let entry = &kb.attribute_map[idx];
        let distinct = snapshot
            .matched_attribute_values
            .get(&entry.attribute)
            .map_or(0, |values| values.len());
        if distinct >= 2 {
            evidence.push(("descriptor".into(), entry.descriptor.clone()));
            evidence.push(("distinct_values".into(), distinct.to_string()));
            return Diagnosis {
                state: DiagState::PrecisionFailure,
                subcase: Subcase::AttributeMisalignment,
                evidence,
            };
        }
    }

    for idx in kb.matched_rewrite_entries(&tokens) {
        let entry = &kb.scenario_map[idx];
        if let Some(tag) = &entry.item_tag {
            let fraction = snapshot.tag_fraction(tag);
            if fraction > 0.0 && fraction < 1.0 {
                evidence.push(("scenario_key".into(), entry.key.clone()));
                evidence.push(("tag_fraction".into(), format!("{fraction:.4}")));
                return Diagnosis {
                    state: DiagState::PrecisionFailure,
                    subcase: Subcase::ScenarioMisalignment,
                    evidence,
                };
            }
        }
    }

    Diagnosis {
        state: DiagState::PrecisionFailure,
        subcase: Subcase::AttributeMisalignment,
        evidence,
    }
}
