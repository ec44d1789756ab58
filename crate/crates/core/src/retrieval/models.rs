//! Synthetic relevance and conversion models.
//!
//! Deterministic stand-ins for the production scoring models. Both are pure
//! functions of their inputs.

use std::collections::BTreeSet;

use crate::retrieval::tokenize;
use crate::world::{Intent, Item};

/// What relevance is judged against: structured intent when ground truth is
/// available, otherwise the raw query text.
#[derive(Debug, Clone, Copy)]
pub enum RelTarget<'a> {
    Intent(&'a Intent),
    Text(&'a str),
}

impl<'a> RelTarget<'a> {
    /// Prefers the structured intent when it carries any signal.
    pub fn for_case(intent: &'a Intent, text: &'a str) -> Self {
        if intent.is_empty() {
            RelTarget::Text(text)
        } else {
            RelTarget::Intent(intent)
        }
    }
}

/// Relevance in [0, 1]. Against structured intent the score is a weighted
/// sum of category match (0.5), required-attribute agreement (0.3), and
/// scenario compatibility (0.2); a constraint the intent does not express
/// is trivially satisfied. Without intent it falls back to token-overlap
/// Jaccard between the query and the item title.
pub fn relevance(target: RelTarget<'_>, item: &Item) -> f64 {
    match target {
        RelTarget::Intent(intent) => relevance_intent(intent, item),
        RelTarget::Text(text) => relevance_text(text, item),
    }
}

fn relevance_intent(intent: &Intent, item: &Item) -> f64 {
    let category = match &intent.category {
        Some(cat) => {
            if item.category == *cat {
                1.0
            } else {
                0.0
            }
        }
        None => 1.0,
    };
    let attributes = if intent.required_attrs.is_empty() {
        1.0
    } else {
        let mut intersection = 0usize;
        let mut union = 0usize;
        for (name, value) in &intent.required_attrs {
            union += 1;
            match item.attributes.get(name) {
                Some(v) if v == value => intersection += 1,
                Some(_) => union += 1,
                None => {}
            }
        }
        intersection as f64 / union as f64
    };
    let scenario = match &intent.scenario {
        Some(tag) => {
            if item.scenarios.contains(tag) {
                1.0
            } else {
                0.0
            }
        }
        None => 1.0,
    };
    0.5 * category + 0.3 * attributes + 0.2 * scenario
}

fn relevance_text(text: &str, item: &Item) -> f64 {
    let query: BTreeSet<String> = tokenize(text).into_iter().collect();
    let title: BTreeSet<String> = tokenize(&item.title).into_iter().collect();
    if query.is_empty() || title.is_empty() {
        return 0.0;
    }
    let intersection = query.intersection(&title).count() as f64;
    let union = query.union(&title).count() as f64;
    intersection / union
}

/// Predicted conversion in [0, 1]: quality damped by price.
pub fn predicted_cvr(item: &Item, price_scale: f64) -> f64 {
    item.quality * (1.0 / (1.0 + item.price / price_scale))
}
