//! Reformulation knowledge base.
//!
//! Holds everything a planner may consult without touching the live index:
//! scenario and category rewrite entries, vague-descriptor bindings, filler
//! and typo and unit tables, plus the closed-world category vocabulary the
//! generator emits.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::retrieval::tokenize;

/// Which observed value a vague descriptor binds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extremum {
    Max,
    Min,
}

/// One rewrite rule: a query phrase mapped to concrete rewrite texts.
/// `item_tag`, when set, names the scenario tag carried by compatible items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteEntry {
    pub key: String,
    pub rewrites: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_tag: Option<String>,
    #[serde(default = "default_prior")]
    pub prior: f64,
}

/// A vague descriptor bound to a concrete attribute specification.
/// `template` must contain `{value}`; the planner substitutes either the
/// extremal observed value or `default_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeEntry {
    pub descriptor: String,
    pub attribute: String,
    pub direction: Extremum,
    pub template: String,
    pub default_value: String,
    #[serde(default = "default_prior")]
    pub prior: f64,
}

fn default_prior() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub scenario_map: Vec<RewriteEntry>,
    pub attribute_map: Vec<AttributeEntry>,
    pub filler_lexicon: BTreeSet<String>,
    pub typo_table: BTreeMap<String, String>,
    pub unit_table: BTreeMap<String, String>,
    pub category_vocab: BTreeSet<String>,
    pub negation_markers: BTreeSet<String>,
    pub accessory_markers: BTreeSet<String>,
}

/// True when `needle`'s tokens appear consecutively in `haystack`.
pub fn phrase_in_tokens(haystack: &[String], needle: &str) -> bool {
    let needle_tokens = tokenize(needle);
    if needle_tokens.is_empty() || needle_tokens.len() > haystack.len() {
        return false;
    }
    haystack
        .windows(needle_tokens.len())
        .any(|w| w == needle_tokens.as_slice())
}

impl KnowledgeBase {
    /// Indices of scenario-map entries whose key occurs in the query.
    pub fn matched_rewrite_entries(&self, query_tokens: &[String]) -> Vec<usize> {
        self.scenario_map
            .iter()
            .enumerate()
            .filter(|(_, e)| phrase_in_tokens(query_tokens, &e.key))
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of attribute-map entries whose descriptor occurs in the query.
    pub fn matched_attribute_entries(&self, query_tokens: &[String]) -> Vec<usize> {
        self.attribute_map
            .iter()
            .enumerate()
            .filter(|(_, e)| phrase_in_tokens(query_tokens, &e.descriptor))
            .map(|(i, _)| i)
            .collect()
    }

    /// First negation marker with a following object token, if any.
    pub fn negation(&self, query_tokens: &[String]) -> Option<(usize, String)> {
        for (pos, tok) in query_tokens.iter().enumerate() {
            if self.negation_markers.contains(tok) {
                if let Some(object) = query_tokens.get(pos + 1) {
                    return Some((pos, object.clone()));
                }
            }
        }
        None
    }

    /// Categories whose name tokens contain `token` (with a trailing-s fold).
    pub fn categories_matching(&self, token: &str) -> Vec<&str> {
        let folded = fold_plural(token);
        self.category_vocab
            .iter()
            .filter(|cat| {
                tokenize(cat)
                    .iter()
                    .any(|cat_tok| fold_plural(cat_tok) == folded)
            })
            .map(|s| s.as_str())
            .collect()
    }

    /// Number of slot candidates a policy can address: every rewrite entry,
    /// every attribute entry, and one reserved negation slot.
    pub fn candidate_count(&self) -> usize {
        self.scenario_map.len() + self.attribute_map.len() + 1
    }
}

/// Cheap singular/plural fold used for category-vocabulary matching.
pub fn fold_plural(token: &str) -> &str {
    token.strip_suffix('s').filter(|s| s.len() >= 3).unwrap_or(token)
}
