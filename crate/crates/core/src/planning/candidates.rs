//! Concretization candidates.
//!
//! A candidate is one knowledge-base entry bound to the current query and
//! snapshot: scenario and category rewrites come through as-is, vague
//! descriptors bind to the extremal observed attribute value, and negation
//! evidence becomes an exclusion filter. Candidates carry the snapshot
//! evidence that lets a planner prefer the entry the retrieval reality
//! fails to serve.

use crate::diagnosis::{head_category, Diagnosis, HeadMatch, Subcase};
use crate::error::{Error, Result};
use crate::planning::plan::{compare_values, FilterOp, SearchAction};
use crate::retrieval::{tokenize, Snapshot};
use crate::world::{fold_plural, Extremum, KnowledgeBase};

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateKind {
    /// Index into `kb.scenario_map`.
    Rewrite(usize),
    /// Index into `kb.attribute_map`.
    Attribute(usize),
    Negation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    /// Global slot index a policy can address.
    pub slot: usize,
    pub rewrites: Vec<String>,
    pub filter: Option<SearchAction>,
    /// Snapshot support for choosing this entry; zero without a snapshot.
    pub evidence: f64,
    pub prior: f64,
}

/// Every knowledge-base entry applicable to this query, bound against the
/// snapshot. An empty snapshot yields query-only candidates with zero
/// evidence and default value bindings.
pub fn enumerate_candidates(
    query: &str,
    snapshot: &Snapshot,
    kb: &KnowledgeBase,
) -> Vec<Candidate> {
    let tokens = tokenize(query);
    let mut out = Vec::new();
    let has_top = !snapshot.top.is_empty();

    for idx in kb.matched_rewrite_entries(&tokens) {
        let entry = &kb.scenario_map[idx];
        let evidence = match (&entry.item_tag, has_top) {
            (Some(tag), true) => 1.0 - snapshot.tag_fraction(tag),
            _ => 0.0,
        };
        out.push(Candidate {
            kind: CandidateKind::Rewrite(idx),
            slot: idx,
            rewrites: entry.rewrites.clone(),
            filter: None,
            evidence,
            prior: entry.prior,
        });
    }

    for idx in kb.matched_attribute_entries(&tokens) {
        let entry = &kb.attribute_map[idx];
        let observed = snapshot.matched_attribute_values.get(&entry.attribute);
        let (value, evidence) = match observed {
            Some(values) if !values.is_empty() => {
                let extremal = values
                    .iter()
                    .reduce(|a, b| {
                        let keep_b = match entry.direction {
                            Extremum::Max => compare_values(b, a) == std::cmp::Ordering::Greater,
                            Extremum::Min => compare_values(b, a) == std::cmp::Ordering::Less,
                        };
                        if keep_b {
                            b
                        } else {
                            a
                        }
                    })
                    .expect("non-empty");
                let evidence = if values.len() >= 2 { 1.0 } else { 0.5 };
                (extremal.clone(), evidence)
            }
            _ => (entry.default_value.clone(), 0.0),
        };
        out.push(Candidate {
            kind: CandidateKind::Attribute(idx),
            slot: kb.scenario_map.len() + idx,
            rewrites: vec![entry.template.replace("{value}", &value)],
            filter: None,
            evidence,
            prior: entry.prior,
        });
    }

    if let Some((_, object)) = kb.negation(&tokens) {
        let bound = snapshot.matched_attribute_values.iter().find_map(|(attr, values)| {
            values
                .iter()
                .find(|v| tokenize(v).iter().any(|t| t == &object))
                .map(|v| (attr.clone(), v.clone()))
        });
        let (filter, evidence) = match bound {
            Some((attr, value)) => (
                Some(SearchAction::Filter {
                    attr,
                    op: FilterOp::Neq,
                    value,
                }),
                1.0,
            ),
            None => (None, 0.0),
        };
        out.push(Candidate {
            kind: CandidateKind::Negation,
            slot: kb.scenario_map.len() + kb.attribute_map.len(),
            rewrites: vec![query.to_string()],
            filter,
            evidence,
            prior: 1.0,
        });
    }

    out
}

/// Restricts candidates to the entries a diagnosis subcase calls for.
/// With no diagnosis (the query-only planner) all candidates stay.
pub fn filter_for_subcase(
    candidates: Vec<Candidate>,
    query: &str,
    diagnosis: Option<&Diagnosis>,
    kb: &KnowledgeBase,
) -> Vec<Candidate> {
    let Some(diagnosis) = diagnosis else {
        return candidates;
    };
    let tokens = tokenize(query);
    match diagnosis.subcase {
        Subcase::EntityDrift => {
            // Re-anchor on the drifted head entity.
            let head_token = match head_category(&tokens, kb) {
                HeadMatch::Unique { token, .. } | HeadMatch::Ambiguous { token } => Some(token),
                HeadMatch::NoMatch => None,
            };
            candidates
                .into_iter()
                .filter(|c| match (&c.kind, &head_token) {
                    (CandidateKind::Rewrite(idx), Some(head)) => {
                        tokenize(&kb.scenario_map[*idx].key)
                            .iter()
                            .any(|t| fold_plural(t) == fold_plural(head))
                    }
                    _ => false,
                })
                .collect()
        }
        Subcase::GranularityMismatch | Subcase::ScenarioMisalignment => candidates
            .into_iter()
            .filter(|c| matches!(c.kind, CandidateKind::Rewrite(_)))
            .collect(),
        Subcase::AttributeMisalignment => candidates
            .into_iter()
            .filter(|c| matches!(c.kind, CandidateKind::Attribute(_)))
            .collect(),
        Subcase::NegationFailure => candidates
            .into_iter()
            .filter(|c| matches!(c.kind, CandidateKind::Negation))
            .collect(),
        Subcase::None | Subcase::QueryNoise | Subcase::InventoryVoid => candidates,
    }
}

/// Deterministic concretization: the best-supported applicable entry's
/// rewrite texts, at most `max_rewrites` of them.
pub fn concretize(
    query: &str,
    diagnosis: &Diagnosis,
    snapshot: &Snapshot,
    kb: &KnowledgeBase,
    max_rewrites: usize,
) -> Result<Vec<String>> {
    let candidates = filter_for_subcase(
        enumerate_candidates(query, snapshot, kb),
        query,
        Some(diagnosis),
        kb,
    );
    let best = select_argmax(&candidates).ok_or(Error::NoConcretization)?;
    Ok(best
        .rewrites
        .iter()
        .take(max_rewrites)
        .cloned()
        .collect())
}

/// Highest prior-plus-evidence score; ties resolve in knowledge-base order.
pub fn select_argmax(candidates: &[Candidate]) -> Option<&Candidate> {
    candidates.iter().reduce(|best, c| {
        if c.prior + c.evidence > best.prior + best.evidence {
            c
        } else {
            best
        }
    })
}
