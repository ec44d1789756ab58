//! The retrieval environment: tokenization, inverted index, synthetic
//! scoring models, and the probe and full-rank paths.

mod index;
mod models;
mod search;
mod tokenize;

pub use index::{build_index, indexed_tokens, Index, Posting, BM25_B, BM25_K1};
pub use models::{predicted_cvr, relevance, RelTarget};
pub use search::{
    full_rank, probe, rank_gated, retrieve, Cost, RankParams, RelevanceStats, ScoredItem, Snapshot,
};
pub use tokenize::tokenize;
