//! Query sanitization: drop fillers, fix typos, canonicalize units.

use crate::error::{Error, Result};
use crate::retrieval::Index;
use crate::world::KnowledgeBase;

/// Levenshtein distance with an early-exit bound.
pub fn edit_distance_within(a: &str, b: &str, bound: usize) -> Option<usize> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > bound {
        return None;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        let mut row_min = curr[0];
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(curr[j] + 1);
            row_min = row_min.min(curr[j + 1]);
        }
        if row_min > bound {
            return None;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    (prev[b.len()] <= bound).then_some(prev[b.len()])
}

/// Minimum token length for vocabulary-based spell correction. Shorter
/// tokens are almost always within distance two of something.
const CORRECTION_MIN_LEN: usize = 4;

/// Closest vocabulary token within edit distance two, ties resolved
/// alphabetically.
pub fn correct_against_vocab(token: &str, index: &Index) -> Option<String> {
    if token.chars().count() < CORRECTION_MIN_LEN {
        return None;
    }
    let mut best: Option<(usize, &str)> = None;
    for word in index.vocab() {
        if let Some(d) = edit_distance_within(token, word, 2) {
            if d == 0 {
                return None;
            }
            best = match best {
                Some((bd, bw)) if (bd, bw) <= (d, word) => Some((bd, bw)),
                _ => Some((d, word)),
            };
        }
    }
    best.map(|(_, w)| w.to_string())
}

/// Splits text into alphanumeric words, keeping the original surface form.
fn surface_words(text: &str) -> Vec<(String, String)> {
    let mut words = Vec::new();
    let mut surface = String::new();
    let mut lower = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            surface.push(ch);
            lower.extend(ch.to_lowercase());
        } else if !surface.is_empty() {
            words.push((std::mem::take(&mut surface), std::mem::take(&mut lower)));
        }
    }
    if !surface.is_empty() {
        words.push((surface, lower));
    }
    words
}

/// Removes non-informative tokens and repairs lexical errors while keeping
/// token order. Untouched words keep their original surface form.
pub fn sanitize(query: &str, kb: &KnowledgeBase, index: &Index) -> Result<String> {
    let mut out: Vec<String> = Vec::new();
    for (surface, lower) in surface_words(query) {
        if kb.filler_lexicon.contains(&lower) {
            continue;
        }
        if let Some(fix) = kb.typo_table.get(&lower) {
            out.push(fix.clone());
            continue;
        }
        if let Some(canonical) = kb.unit_table.get(&lower) {
            out.push(canonical.clone());
            continue;
        }
        if !index.contains_token(&lower) {
            if let Some(fix) = correct_against_vocab(&lower, index) {
                out.push(fix);
                continue;
            }
        }
        out.push(surface);
    }
    if out.is_empty() {
        return Err(Error::EmptyAfterSanitize);
    }
    Ok(out.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::build_index;
    use crate::world::{Catalog, Item};

    fn index_with_titles(titles: &[&str]) -> Index {
        let items = titles
            .iter()
            .enumerate()
            .map(|(i, t)| Item {
                id: format!("i{i}"),
                title: (*t).to_string(),
                category: "c".into(),
                brand: "b".into(),
                attributes: Default::default(),
                scenarios: Default::default(),
                price: 1.0,
                quality: 0.5,
            })
            .collect();
        build_index(Catalog::from_items(items).unwrap()).unwrap()
    }

    fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::default();
        kb.typo_table.insert("laptttop".into(), "laptop".into());
        kb.filler_lexicon.insert("wth".into());
        kb.filler_lexicon.insert("plz".into());
        kb.unit_table.insert("32g".into(), "32GB RAM".into());
        kb
    }

    #[test]
    fn fixture_sanitization() {
        let index = index_with_titles(&["business laptop", "red tent"]);
        assert_eq!(
            sanitize("laptttop wth 32G", &kb(), &index).unwrap(),
            "laptop 32GB RAM"
        );
    }

    #[test]
    fn clean_query_is_unchanged() {
        let index = index_with_titles(&["iPhone 17 Pro"]);
        assert_eq!(
            sanitize("iPhone 17 Pro", &kb(), &index).unwrap(),
            "iPhone 17 Pro"
        );
    }

    #[test]
    fn filler_only_prefix_is_dropped() {
        let index = index_with_titles(&["red tent"]);
        assert_eq!(sanitize("plz tent", &kb(), &index).unwrap(), "tent");
    }

    #[test]
    fn all_tokens_removed_is_an_error() {
        let index = index_with_titles(&["red tent"]);
        assert!(matches!(
            sanitize("plz wth", &kb(), &index),
            Err(Error::EmptyAfterSanitize)
        ));
    }

    #[test]
    fn vocab_correction_applies_to_unknown_tokens() {
        let index = index_with_titles(&["wireless earbuds"]);
        assert_eq!(
            sanitize("wireles earbuds", &kb(), &index).unwrap(),
            "wireless earbuds"
        );
    }

    #[test]
    fn short_unknown_tokens_stay() {
        let index = index_with_titles(&["red tent"]);
        assert_eq!(sanitize("xy tent", &kb(), &index).unwrap(), "xy tent");
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance_within("laptttop", "laptop", 2), Some(2));
        assert_eq!(edit_distance_within("water", "water", 2), Some(0));
        assert_eq!(edit_distance_within("water", "kayak", 2), None);
    }
}
