//! Complexity-aware routing.
//!
//! A logistic classifier over cheap query features decides whether a query
//! takes the fast path (plain full ranking, no probe, no planner) or the
//! full planning pipeline.

use serde::{Deserialize, Serialize};

use crate::diagnosis::has_noise_tokens;
use crate::error::{Error, Result};
use crate::retrieval::{tokenize, Index};
use crate::world::{Complexity, KnowledgeBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutePath {
    FastPath,
    ComplexPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub path: RoutePath,
    pub score: f64,
    pub features_used: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterParams {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl RouterParams {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

const FEATURE_NAMES: [&str; 8] = [
    "bias",
    "token_count",
    "vocab_coverage",
    "noise_hit",
    "scenario_hit",
    "descriptor_hit",
    "negation_hit",
    "model_token",
];

pub fn route_features(query: &str, kb: &KnowledgeBase, index: &Index) -> Vec<f64> {
    let tokens = tokenize(query);
    if tokens.is_empty() {
        return vec![0.0; FEATURE_NAMES.len()];
    }
    let in_vocab = tokens.iter().filter(|t| index.contains_token(t)).count();
    let has_model_token = tokens
        .iter()
        .any(|t| t.chars().any(|c| c.is_ascii_digit()) && t.chars().any(|c| c.is_alphabetic()))
        || tokens.iter().any(|t| t.chars().all(|c| c.is_ascii_digit()));
    vec![
        1.0,
        (tokens.len().min(10) as f64) / 10.0,
        in_vocab as f64 / tokens.len() as f64,
        f64::from(has_noise_tokens(&tokens, kb)),
        f64::from(!kb.matched_rewrite_entries(&tokens).is_empty()),
        f64::from(!kb.matched_attribute_entries(&tokens).is_empty()),
        f64::from(kb.negation(&tokens).is_some()),
        f64::from(has_model_token),
    ]
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Scores a query's complexity. The empty query takes the fast path by
/// convention.
pub fn route(query: &str, params: &RouterParams, kb: &KnowledgeBase, index: &Index) -> Route {
    let features = route_features(query, kb, index);
    if tokenize(query).is_empty() {
        return Route {
            path: RoutePath::FastPath,
            score: 0.0,
            features_used: vec![],
        };
    }
    let z: f64 = params
        .weights
        .iter()
        .zip(&features)
        .map(|(w, f)| w * f)
        .sum();
    let score = sigmoid(z);
    Route {
        path: if score >= params.threshold {
            RoutePath::ComplexPath
        } else {
            RoutePath::FastPath
        },
        score,
        features_used: FEATURE_NAMES
            .iter()
            .map(|n| n.to_string())
            .zip(features)
            .collect(),
    }
}

/// Logistic regression on labeled queries. The decision threshold is set at
/// the simple-traffic quantile of the fitted scores, so the fast-path share
/// tracks the training mix.
pub fn fit_router(
    labeled: &[(String, Complexity)],
    kb: &KnowledgeBase,
    index: &Index,
    learning_rate: f64,
    epochs: usize,
) -> Result<RouterParams> {
    let n_simple = labeled
        .iter()
        .filter(|(_, c)| *c == Complexity::Simple)
        .count();
    if n_simple == 0 || n_simple == labeled.len() {
        return Err(Error::SingleClass);
    }
    let features: Vec<Vec<f64>> = labeled
        .iter()
        .map(|(q, _)| route_features(q, kb, index))
        .collect();
    let targets: Vec<f64> = labeled
        .iter()
        .map(|(_, c)| f64::from(*c == Complexity::Complex))
        .collect();

    let dim = FEATURE_NAMES.len();
    let mut weights = vec![0.0; dim];
    for _ in 0..epochs {
        let mut grad = vec![0.0; dim];
        for (phi, y) in features.iter().zip(&targets) {
            let z: f64 = weights.iter().zip(phi).map(|(w, f)| w * f).sum();
            let err = y - sigmoid(z);
            for (g, f) in grad.iter_mut().zip(phi) {
                *g += err * f;
            }
        }
        let scale = learning_rate / labeled.len() as f64;
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w += scale * g;
        }
    }

    let mut scores: Vec<f64> = features
        .iter()
        .map(|phi| sigmoid(weights.iter().zip(phi).map(|(w, f)| w * f).sum()))
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let threshold = scores[n_simple.min(scores.len() - 1)];
    Ok(RouterParams { weights, threshold })
}

pub fn router_accuracy(
    labeled: &[(String, Complexity)],
    params: &RouterParams,
    kb: &KnowledgeBase,
    index: &Index,
) -> f64 {
    let correct = labeled
        .iter()
        .filter(|(q, c)| {
            let want = if *c == Complexity::Complex {
                RoutePath::ComplexPath
            } else {
                RoutePath::FastPath
            };
            route(q, params, kb, index).path == want
        })
        .count();
    correct as f64 / labeled.len().max(1) as f64
}
