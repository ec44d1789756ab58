//! Query cases with planted ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Complexity {
    Simple,
    Complex,
}

/// Structured ground truth behind a query. Every field is optional; a
/// noise-only or void query may carry an empty intent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Intent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub required_attrs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub negated: Vec<String>,
}

impl Intent {
    pub fn is_empty(&self) -> bool {
        self.category.is_none()
            && self.required_attrs.is_empty()
            && self.scenario.is_none()
            && self.negated.is_empty()
    }
}

/// The label a generator class intended for a query, recorded so world
/// soundness can be checked end to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorClass {
    Specific,
    Noise,
    Void,
    Drift,
    Granularity,
    Attribute,
    Scenario,
    DualScenario,
    Negation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub text: String,
    pub complexity: Complexity,
    #[serde(default)]
    pub intent: Intent,
    #[serde(default)]
    pub targets: BTreeSet<String>,
    /// Generator provenance; not part of the public record contract but
    /// serialized for downstream soundness checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<GeneratorClass>,
}
