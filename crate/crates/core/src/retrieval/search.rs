//! Retrieval paths: lexical top-k, the lightweight probe, and full ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::planning::SearchAction;
use crate::retrieval::{predicted_cvr, relevance, tokenize, Index, RelTarget};
use crate::world::Item;

/// Model-evaluation accounting. Latency is modeled as evaluation counts,
/// which keeps the probe-versus-full-rank comparison deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub bm25: u64,
    pub relevance: u64,
    pub cvr: u64,
}

impl Cost {
    pub fn total(&self) -> u64 {
        self.bm25 + self.relevance + self.cvr
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost {
            bm25: self.bm25 + rhs.bm25,
            relevance: self.relevance + rhs.relevance,
            cvr: self.cvr + rhs.cvr,
        }
    }
}

/// An item with whichever scores the producing path computed. The probe
/// path never fills `cvr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: Item,
    pub lexical: f64,
    pub relevance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cvr: Option<f64>,
}

impl ScoredItem {
    pub fn gated_score(&self, tau_rel: f64) -> f64 {
        if self.relevance >= tau_rel {
            self.cvr.unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RelevanceStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// The probe observation: hit count, scored head of the result list, and
/// aggregate diagnostics. This is the planner's wire input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub query: String,
    pub total_hits: usize,
    pub top: Vec<ScoredItem>,
    pub category_histogram: BTreeMap<String, f64>,
    pub relevance_stats: RelevanceStats,
    pub unmatched_tokens: Vec<String>,
    pub matched_attribute_values: BTreeMap<String, BTreeSet<String>>,
    pub cost: Cost,
}

impl Snapshot {
    /// A contentless snapshot, used where planning must proceed without
    /// probe access.
    pub fn empty(query: &str) -> Self {
        Snapshot {
            query: query.to_string(),
            total_hits: 0,
            top: Vec::new(),
            category_histogram: BTreeMap::new(),
            relevance_stats: RelevanceStats::default(),
            unmatched_tokens: Vec::new(),
            matched_attribute_values: BTreeMap::new(),
            cost: Cost::default(),
        }
    }

    /// Most frequent category among the top items; ties resolve by name.
    pub fn modal_category(&self) -> Option<&str> {
        self.category_histogram
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then_with(|| b.0.cmp(a.0)))
            .map(|(name, _)| name.as_str())
    }

    /// Fraction of top items carrying the scenario tag.
    pub fn tag_fraction(&self, tag: &str) -> f64 {
        if self.top.is_empty() {
            return 0.0;
        }
        let n = self
            .top
            .iter()
            .filter(|s| s.item.scenarios.contains(tag))
            .count();
        n as f64 / self.top.len() as f64
    }
}

/// Lexical-only retrieval: top-k by (BM25 desc, id asc) over items with a
/// positive score.
pub fn retrieve(index: &Index, query_text: &str, k: usize) -> Vec<ScoredItem> {
    if k == 0 {
        return Vec::new();
    }
    let tokens = tokenize(query_text);
    let (scored, _) = index.score_all(&tokens);
    scored
        .into_iter()
        .take(k)
        .map(|(doc, lexical)| ScoredItem {
            item: index.catalog().get(doc).clone(),
            lexical,
            relevance: 0.0,
            cvr: None,
        })
        .collect()
}

/// The lightweight probe: lexical retrieval plus relevance scoring of the
/// head only. Conversion prediction is never invoked on this path.
pub fn probe(index: &Index, query_text: &str, k_probe: usize) -> Snapshot {
    let tokens = tokenize(query_text);
    let (scored, bm25_evals) = index.score_all(&tokens);
    let total_hits = scored.len();

    let mut top: Vec<ScoredItem> = scored
        .into_iter()
        .take(k_probe)
        .map(|(doc, lexical)| {
            let item = index.catalog().get(doc).clone();
            let rel = relevance(RelTarget::Text(query_text), &item);
            ScoredItem {
                item,
                lexical,
                relevance: rel,
                cvr: None,
            }
        })
        .collect();
    let relevance_evals = top.len() as u64;
    top.sort_by(|a, b| {
        b.relevance
            .partial_cmp(&a.relevance)
            .unwrap()
            .then_with(|| b.lexical.partial_cmp(&a.lexical).unwrap())
            .then_with(|| a.item.id.cmp(&b.item.id))
    });

    let mut category_histogram = BTreeMap::new();
    let mut matched_attribute_values: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for s in &top {
        *category_histogram.entry(s.item.category.clone()).or_insert(0.0) += 1.0;
        for (name, value) in &s.item.attributes {
            matched_attribute_values
                .entry(name.clone())
                .or_default()
                .insert(value.clone());
        }
    }
    let n = top.len() as f64;
    for fraction in category_histogram.values_mut() {
        *fraction /= n;
    }

    let relevance_stats = if top.is_empty() {
        RelevanceStats::default()
    } else {
        let rels: Vec<f64> = top.iter().map(|s| s.relevance).collect();
        RelevanceStats {
            mean: rels.iter().sum::<f64>() / n,
            min: rels.iter().cloned().fold(f64::INFINITY, f64::min),
            max: rels.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    };

    Snapshot {
        query: query_text.to_string(),
        total_hits,
        top,
        category_histogram,
        relevance_stats,
        unmatched_tokens: index.unmatched_tokens(&tokens),
        matched_attribute_values,
        cost: Cost {
            bm25: bm25_evals,
            relevance: relevance_evals,
            cvr: 0,
        },
    }
}

/// Knobs for the full ranking path.
#[derive(Debug, Clone, Copy)]
pub struct RankParams {
    pub tau_rel: f64,
    pub price_scale: f64,
    pub pool_multiple: usize,
}

/// Orders by conversion behind the hard relevance gate: items below the
/// gate contribute score zero and fall back to relevance order.
pub fn rank_gated(items: &mut [ScoredItem], tau_rel: f64) {
    items.sort_by(|a, b| {
        b.gated_score(tau_rel)
            .partial_cmp(&a.gated_score(tau_rel))
            .unwrap()
            .then_with(|| b.relevance.partial_cmp(&a.relevance).unwrap())
            .then_with(|| a.item.id.cmp(&b.item.id))
    });
}

/// Full ranking: BM25 candidate pool, relevance and conversion models over
/// every pool member, then the gated sort. Filters, when present, restrict
/// the candidate set before the pool is taken.
pub fn full_rank(
    index: &Index,
    query_text: &str,
    target: RelTarget<'_>,
    filters: &[SearchAction],
    k: usize,
    params: &RankParams,
) -> (Vec<ScoredItem>, Cost) {
    if k == 0 {
        return (Vec::new(), Cost::default());
    }
    let tokens = tokenize(query_text);
    let (scored, bm25_evals) = index.score_all(&tokens);
    let pool_size = params.pool_multiple.saturating_mul(k);
    let mut pool: Vec<ScoredItem> = scored
        .into_iter()
        .filter(|(doc, _)| {
            filters
                .iter()
                .all(|f| f.filter_accepts(index.catalog().get(*doc)))
        })
        .take(pool_size)
        .map(|(doc, lexical)| {
            let item = index.catalog().get(doc).clone();
            let rel = relevance(target, &item);
            let cvr = predicted_cvr(&item, params.price_scale);
            ScoredItem {
                item,
                lexical,
                relevance: rel,
                cvr: Some(cvr),
            }
        })
        .collect();
    let evals = pool.len() as u64;
    rank_gated(&mut pool, params.tau_rel);
    pool.truncate(k);
    (
        pool,
        Cost {
            bm25: bm25_evals,
            relevance: evals,
            cvr: evals,
        },
    )
}
