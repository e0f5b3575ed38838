//! Label cleaning and the candidate-verification seam.

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// One ranked hit from entity search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentCandidate {
    pub wikidata_id: String,
    pub label: String,
    pub short_description: String,
    /// Position in the search result, 1 (best) through 5.
    pub rank: u8,
}

/// Normalizes a raw corpus label: underscores become spaces, control and
/// replacement characters are stripped, whitespace runs collapse to one
/// space, and the edges are trimmed. Idempotent.
pub fn clean_label(raw: &str) -> String {
    // Whitespace-class controls (tab, newline) must survive to the
    // collapse step as separators; only non-whitespace controls vanish.
    let mapped: String = raw
        .chars()
        .map(|c| if c == '_' { ' ' } else { c })
        .filter(|c| (!c.is_control() || c.is_whitespace()) && *c != '\u{FFFD}')
        .collect();
    let mut out = String::with_capacity(mapped.len());
    let mut last_space = true; // swallows leading whitespace
    for c in mapped.chars() {
        if c.is_whitespace() {
            if !last_space {
                out.push(' ');
                last_space = true;
            }
        } else {
            out.push(c);
            last_space = false;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Case-folds and strips diacritics, e.g. "Iván" → "ivan".
fn fold(s: &str) -> String {
    s.nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

fn token_set(s: &str) -> std::collections::BTreeSet<String> {
    fold(s)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Decides whether a search candidate refers to the same entity as the
/// source label. Implementations must be deterministic for a fixed
/// configuration.
pub trait Verifier {
    fn accept(&self, source_label: &str, candidate: &AlignmentCandidate) -> bool;
}

/// Default verifier: Jaccard overlap of folded token sets between the
/// source label and the candidate label, accepted at ≥ `threshold`.
#[derive(Debug, Clone)]
pub struct SimilarityVerifier {
    pub threshold: f64,
}

impl Default for SimilarityVerifier {
    fn default() -> Self {
        SimilarityVerifier { threshold: 0.8 }
    }
}

impl SimilarityVerifier {
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        let (sa, sb) = (token_set(a), token_set(b));
        if sa.is_empty() && sb.is_empty() {
            return 1.0;
        }
        let inter = sa.intersection(&sb).count() as f64;
        let union = sa.union(&sb).count() as f64;
        inter / union
    }
}

impl Verifier for SimilarityVerifier {
    fn accept(&self, source_label: &str, candidate: &AlignmentCandidate) -> bool {
        self.similarity(source_label, &candidate.label) >= self.threshold
    }
}

/// Case-insensitive label equality — the "exact match" shortcut that
/// bypasses verification. Diacritics are significant here; only the
/// verifier folds them.
pub fn labels_match_exactly(a: &str, b: &str) -> bool {
    a.to_lowercase() == b.to_lowercase()
}
