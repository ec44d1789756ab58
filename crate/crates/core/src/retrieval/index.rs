//! Inverted index with BM25 scoring.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::retrieval::tokenize;
use crate::world::{Catalog, Item};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub doc: usize,
    pub tf: u32,
}

/// Inverted index over a catalog. Postings reference items by catalog
/// position; the catalog itself stays the source of item data.
#[derive(Debug)]
pub struct Index {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_len: f64,
    catalog: Catalog,
}

/// Tokens indexed for one item: title, category, brand, attribute values,
/// and scenario tags. Attribute names are not indexed.
pub fn indexed_tokens(item: &Item) -> Vec<String> {
    let mut tokens = tokenize(&item.title);
    tokens.extend(tokenize(&item.category));
    tokens.extend(tokenize(&item.brand));
    for value in item.attributes.values() {
        tokens.extend(tokenize(value));
    }
    for tag in &item.scenarios {
        tokens.extend(tokenize(tag));
    }
    tokens
}

pub fn build_index(catalog: Catalog) -> Result<Index> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(catalog.len());
    for (doc, item) in catalog.items().iter().enumerate() {
        let tokens = indexed_tokens(item);
        doc_lengths.push(tokens.len() as u32);
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for tok in &tokens {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
        for (tok, tf) in counts {
            postings
                .entry(tok.to_string())
                .or_default()
                .push(Posting { doc, tf });
        }
    }
    let avg_doc_len = doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64;
    Ok(Index {
        postings,
        doc_lengths,
        avg_doc_len,
        catalog,
    })
}

impl Index {
    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn doc_length(&self, doc: usize) -> u32 {
        self.doc_lengths[doc]
    }

    pub fn postings(&self, token: &str) -> Option<&[Posting]> {
        self.postings.get(token).map(|v| v.as_slice())
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.postings.contains_key(token)
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    fn idf(&self, token: &str) -> f64 {
        let n = self.postings.get(token).map_or(0, Vec::len) as f64;
        let total = self.doc_count() as f64;
        (1.0 + (total - n + 0.5) / (n + 0.5)).ln()
    }

    fn tf_norm(&self, tf: u32, doc: usize) -> f64 {
        let tf = tf as f64;
        let len_ratio = self.doc_length(doc) as f64 / self.avg_doc_len;
        tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * len_ratio))
    }

    /// BM25 score of one item for a tokenized query.
    pub fn bm25(&self, query_tokens: &[String], item_id: &str) -> Result<f64> {
        let doc = self
            .catalog
            .index_of(item_id)
            .ok_or_else(|| Error::UnknownItem(item_id.to_string()))?;
        let mut score = 0.0;
        for tok in query_tokens {
            if let Some(postings) = self.postings.get(tok) {
                if let Ok(pos) = postings.binary_search_by_key(&doc, |p| p.doc) {
                    score += self.idf(tok) * self.tf_norm(postings[pos].tf, doc);
                }
            }
        }
        Ok(score)
    }

    /// Scores every matching document. Returns (doc, score) for score > 0,
    /// plus the number of score evaluations performed.
    pub fn score_all(&self, query_tokens: &[String]) -> (Vec<(usize, f64)>, u64) {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for tok in query_tokens {
            if let Some(postings) = self.postings.get(tok) {
                let idf = self.idf(tok);
                for p in postings {
                    *acc.entry(p.doc).or_insert(0.0) += idf * self.tf_norm(p.tf, p.doc);
                }
            }
        }
        let evals = acc.len() as u64;
        let mut scored: Vec<(usize, f64)> = acc.into_iter().collect();
        // Total order: score desc, then catalog id asc.
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| self.catalog.get(a.0).id.cmp(&self.catalog.get(b.0).id))
        });
        (scored, evals)
    }

    /// Query tokens absent from the index vocabulary, in query order,
    /// deduplicated.
    pub fn unmatched_tokens(&self, query_tokens: &[String]) -> Vec<String> {
        let mut seen = BTreeSet::new();
        query_tokens
            .iter()
            .filter(|t| !self.contains_token(t) && seen.insert(t.as_str().to_string()))
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap as Map;

    fn item(id: &str, title: &str) -> Item {
        Item {
            id: id.into(),
            title: title.into(),
            category: String::new(),
            brand: String::new(),
            attributes: Map::new(),
            scenarios: Default::default(),
            price: 1.0,
            quality: 0.5,
        }
    }

    #[test]
    fn empty_catalog_is_an_error() {
        assert!(matches!(
            build_index(Catalog::default()),
            Err(Error::EmptyCatalog)
        ));
    }

    #[test]
    fn postings_count_term_frequency() {
        let mut one = item("a", "red tent");
        one.category = "camping".into();
        let catalog = Catalog::from_items(vec![one]).unwrap();
        let index = build_index(catalog).unwrap();
        assert_eq!(index.postings("red").unwrap()[0].tf, 1);
        assert_eq!(index.postings("tent").unwrap()[0].tf, 1);
        assert_eq!(index.doc_length(0), 3);

        let twice = Catalog::from_items(vec![item("a", "tent tent")]).unwrap();
        let index = build_index(twice).unwrap();
        assert_eq!(index.postings("tent").unwrap()[0].tf, 2);
    }

    #[test]
    fn bm25_single_doc_hand_value() {
        // N=1, token present once, len == avg_len: score reduces to the idf.
        let catalog = Catalog::from_items(vec![item("a", "tent")]).unwrap();
        let index = build_index(catalog).unwrap();
        let score = index.bm25(&tokenize("tent"), "a").unwrap();
        let expected = (4.0f64 / 3.0).ln();
        assert!((score - expected).abs() < 1e-12, "score {score}");
        assert!((expected - 0.28768).abs() < 1e-5);
    }

    #[test]
    fn bm25_zero_for_absent_terms_and_empty_query() {
        let catalog = Catalog::from_items(vec![item("a", "red tent")]).unwrap();
        let index = build_index(catalog).unwrap();
        assert_eq!(index.bm25(&tokenize("kayak"), "a").unwrap(), 0.0);
        assert_eq!(index.bm25(&tokenize(""), "a").unwrap(), 0.0);
    }

    #[test]
    fn bm25_unknown_item_errors() {
        let catalog = Catalog::from_items(vec![item("a", "red tent")]).unwrap();
        let index = build_index(catalog).unwrap();
        assert!(index.bm25(&tokenize("tent"), "nope").is_err());
    }
}
