//! Catalog items.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A catalog product. Attribute values are stored canonically as strings
/// (numeric values keep their unit suffix, e.g. `"shrimp_ratio" -> "60%"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub title: String,
    pub category: String,
    pub brand: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default)]
    pub scenarios: BTreeSet<String>,
    pub price: f64,
    pub quality: f64,
}

impl Item {
    /// Field-level validation; `line` is reported in load errors.
    pub fn validate(&self, line: usize) -> Result<()> {
        let fail = |field: &str, reason: &str| {
            Err(Error::InvalidItem {
                id: self.id.clone(),
                field: field.to_string(),
                reason: format!("{reason} (line {line})"),
            })
        };
        if self.id.is_empty() {
            return fail("id", "must be non-empty");
        }
        if self.title.is_empty() {
            return fail("title", "must be non-empty");
        }
        if !self.price.is_finite() || self.price < 0.0 {
            return fail("price", "must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.quality) {
            return fail("quality", "must be in [0, 1]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item() -> Item {
        Item {
            id: "i1".into(),
            title: "red tent".into(),
            category: "camping gear".into(),
            brand: "acme".into(),
            attributes: BTreeMap::new(),
            scenarios: BTreeSet::new(),
            price: 10.0,
            quality: 0.5,
        }
    }

    #[test]
    fn valid_item_passes() {
        assert!(item().validate(1).is_ok());
    }

    #[test]
    fn quality_out_of_range_fails() {
        let mut it = item();
        it.quality = 1.5;
        assert!(it.validate(1).is_err());
    }

    #[test]
    fn negative_price_fails() {
        let mut it = item();
        it.price = -1.0;
        assert!(it.validate(1).is_err());
    }

    #[test]
    fn empty_title_fails() {
        let mut it = item();
        it.title.clear();
        match it.validate(2) {
            Err(Error::InvalidItem { field, .. }) => assert_eq!(field, "title"),
            other => panic!("expected invalid item, got {other:?}"),
        }
    }
}
