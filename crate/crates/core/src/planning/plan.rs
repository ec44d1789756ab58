//! Plan representation.

use serde::{Deserialize, Serialize};

use crate::world::Item;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterOp {
    Eq,
    Neq,
    Gte,
    Lte,
}

/// One search action. A plan is a set of these executed in parallel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SearchAction {
    Rewrite {
        text: String,
    },
    Filter {
        attr: String,
        op: FilterOp,
        value: String,
    },
    Halt,
}

impl SearchAction {
    pub fn rewrite(text: impl Into<String>) -> Self {
        SearchAction::Rewrite { text: text.into() }
    }

    pub fn is_rewrite(&self) -> bool {
        matches!(self, SearchAction::Rewrite { .. })
    }

    pub fn is_filter(&self) -> bool {
        matches!(self, SearchAction::Filter { .. })
    }

    /// Whether an item passes this action when used as a constraint.
    /// Rewrites and halts never restrict.
    pub fn filter_accepts(&self, item: &Item) -> bool {
        let SearchAction::Filter { attr, op, value } = self else {
            return true;
        };
        let actual = item.attributes.get(attr);
        match op {
            FilterOp::Eq => actual == Some(value),
            FilterOp::Neq => actual != Some(value),
            FilterOp::Gte | FilterOp::Lte => {
                let Some(actual) = actual else { return false };
                let ord = compare_values(actual, value);
                match op {
                    FilterOp::Gte => ord != std::cmp::Ordering::Less,
                    _ => ord != std::cmp::Ordering::Greater,
                }
            }
        }
    }
}

/// Numeric-prefix comparison with a lexicographic fallback, so values like
/// "60%" and "10%" order numerically.
pub fn compare_values(a: &str, b: &str) -> std::cmp::Ordering {
    match (numeric_prefix(a), numeric_prefix(b)) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
        _ => a.cmp(b),
    }
}

pub fn numeric_prefix(value: &str) -> Option<f64> {
    let end = value
        .char_indices()
        .take_while(|(i, c)| c.is_ascii_digit() || *c == '.' || (*i == 0 && *c == '-'))
        .map(|(i, c)| i + c.len_utf8())
        .last()?;
    value[..end].parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Teacher,
    Student,
    Blind,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<SearchAction>,
    pub provenance: Provenance,
}

impl Plan {
    pub fn identity(query: &str, provenance: Provenance) -> Self {
        Plan {
            actions: vec![SearchAction::rewrite(query)],
            provenance,
        }
    }

    pub fn halt(provenance: Provenance) -> Self {
        Plan {
            actions: vec![SearchAction::Halt],
            provenance,
        }
    }

    pub fn is_halt(&self) -> bool {
        self.actions.iter().any(|a| matches!(a, SearchAction::Halt))
    }

    pub fn rewrites(&self) -> impl Iterator<Item = &str> {
        self.actions.iter().filter_map(|a| match a {
            SearchAction::Rewrite { text } => Some(text.as_str()),
            _ => None,
        })
    }

    pub fn filters(&self) -> Vec<SearchAction> {
        self.actions.iter().filter(|a| a.is_filter()).cloned().collect()
    }

    /// Halt exclusivity and the action budget.
    pub fn is_well_formed(&self, n_max: usize) -> bool {
        if self.actions.is_empty() || self.actions.len() > n_max {
            return false;
        }
        if self.is_halt() {
            return self.actions.len() == 1;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_json_shape() {
        let plan = Plan {
            actions: vec![
                SearchAction::rewrite("khakis"),
                SearchAction::Filter {
                    attr: "contains".into(),
                    op: FilterOp::Neq,
                    value: "nuts".into(),
                },
            ],
            provenance: Provenance::Teacher,
        };
        let json = serde_json::to_value(&plan).unwrap();
        assert_eq!(json["actions"][0]["kind"], "rewrite");
        assert_eq!(json["actions"][0]["text"], "khakis");
        assert_eq!(json["actions"][1]["kind"], "filter");
        assert_eq!(json["actions"][1]["op"], "neq");
        assert_eq!(json["provenance"], "teacher");
        let halt = Plan::halt(Provenance::Student);
        let json = serde_json::to_value(&halt).unwrap();
        assert_eq!(json["actions"][0]["kind"], "halt");
    }

    #[test]
    fn halt_must_be_alone() {
        let mut plan = Plan::halt(Provenance::Teacher);
        assert!(plan.is_well_formed(4));
        plan.actions.push(SearchAction::rewrite("x"));
        assert!(!plan.is_well_formed(4));
    }

    #[test]
    fn numeric_prefix_comparisons() {
        assert_eq!(compare_values("60%", "10%"), std::cmp::Ordering::Greater);
        assert_eq!(compare_values("8h", "24h"), std::cmp::Ordering::Less);
        assert_eq!(compare_values("abc", "abd"), std::cmp::Ordering::Less);
    }

    #[test]
    fn filter_semantics() {
        let mut item = crate::world::Item {
            id: "a".into(),
            title: "granola bar".into(),
            category: "snacks".into(),
            brand: "acme".into(),
            attributes: Default::default(),
            scenarios: Default::default(),
            price: 1.0,
            quality: 0.5,
        };
        let neq = SearchAction::Filter {
            attr: "contains".into(),
            op: FilterOp::Neq,
            value: "nuts".into(),
        };
        // Missing attribute passes an exclusion filter.
        assert!(neq.filter_accepts(&item));
        item.attributes.insert("contains".into(), "nuts".into());
        assert!(!neq.filter_accepts(&item));
        let gte = SearchAction::Filter {
            attr: "ratio".into(),
            op: FilterOp::Gte,
            value: "50%".into(),
        };
        assert!(!gte.filter_accepts(&item));
        item.attributes.insert("ratio".into(), "60%".into());
        assert!(gte.filter_accepts(&item));
    }
}
