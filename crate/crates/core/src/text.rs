//! Token normalization and similarity helpers shared by the dependency-graph
//! builder and the detectors.
//!
//! Normalization is deliberately cheap and deterministic: lowercase,
//! whitespace-split, punctuation stripped from token edges. Underscores and
//! digits are kept so identifiers like `ERR_42` survive intact.

use std::collections::BTreeSet;

/// Lowercase, whitespace-split, strip leading/trailing punctuation.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '_');
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    normalize_tokens(text).into_iter().collect()
}

/// Jaccard similarity over normalized token sets. Empty-vs-empty is 1.0.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Overlap coefficient: |A ∩ B| / min(|A|, |B|). Used for data-flow edges so
/// a short result token quoted inside a long message still counts as flow.
pub fn overlap_coefficient(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count() as f64;
    inter / a.len().min(b.len()) as f64
}

/// Count of shared normalized tokens.
pub fn shared_tokens(a: &BTreeSet<String>, b: &BTreeSet<String>) -> usize {
    a.intersection(b).count()
}
