//! Removal of temporal expressions from short descriptions.
//!
//! Rule-based: an ordered, published pattern list removes date ranges,
//! anchored phrases ("since 1999", "born 1950"), month names with years,
//! ISO-style dates, decades, and bare 4-digit years; a cleanup pass then
//! normalizes the punctuation and whitespace left behind. The function is
//! idempotent and never lengthens its input.

use std::sync::OnceLock;

use regex::Regex;

const MONTHS: &str = "January|February|March|April|May|June|July|August|September|October|\
November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec";

/// The ordered removal patterns. Ranges come before single anchors so a
/// span like "from 1929 to 2003" disappears whole instead of leaving
/// "from to" behind; bare years come last as the catch-all.
pub fn temporal_patterns() -> Vec<String> {
    let year = r"[12]\d{3}";
    vec![
        // "from 1929 to 2003", "between 1990 and 1995"
        format!(r"(?i)\bfrom\s+{year}\s+(to|until|till)\s+{year}\b"),
        format!(r"(?i)\bbetween\s+{year}\s+and\s+{year}\b"),
        // "1929–2003", "1929 - 2003" (hyphen, en or em dash)
        format!(r"\b{year}\s*[-\u{{2013}}\u{{2014}}]\s*{year}\b"),
        // "born 1950", "born in 1950", "died 2003", "b. 1950", "d. 2003"
        format!(r"(?i)\b(born|died|b\.|d\.)\s*(in\s+|on\s+)?{year}\b"),
        // "since 1999", "until 2003", "before 1980", "after 2001",
        // "as of 2020", "circa 1900", "c. 1900"
        format!(r"(?i)\b(since|until|till|before|after|as\s+of|circa|c\.)\s+{year}\b"),
        // "12 January 2020" / "January 12, 2020" / "January 2020"
        format!(r"(?i)\b\d{{1,2}}(st|nd|rd|th)?\s+(of\s+)?({MONTHS})\.?\s+{year}\b"),
        format!(r"(?i)\b({MONTHS})\.?\s+\d{{1,2}}(st|nd|rd|th)?,?\s+{year}\b"),
        format!(r"(?i)\b({MONTHS})\.?,?\s+(of\s+)?{year}\b"),
        // ISO-ish numeric dates: 2020-01-01, 2020/01/01, 2020-01, 2020/01
        format!(r"\b{year}[-/]\d{{1,2}}([-/]\d{{1,2}})?\b"),
        // decades: "1990s", "the 1990s"
        format!(r"(?i)\b(the\s+)?[12]\d{{2}}0s\b"),
        // bare 4-digit year tokens
        format!(r"\b{year}\b"),
    ]
}

struct Rules {
    removals: Vec<Regex>,
    empty_brackets: Regex,
    space_runs: Regex,
    space_before_punct: Regex,
    punct_runs: Regex,
    dangling_tail: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        removals: temporal_patterns()
            .iter()
            .map(|p| Regex::new(p).expect("pattern compiles"))
            .collect(),
        empty_brackets: Regex::new(r"\(\s*\)|\[\s*\]").unwrap(),
        space_runs: Regex::new(r"\s{2,}").unwrap(),
        space_before_punct: Regex::new(r"\s+([,;.:!?])").unwrap(),
        punct_runs: Regex::new(r"([,;:])(\s*[,;:])+").unwrap(),
        dangling_tail: Regex::new(
            r"(?i)\s+(in|on|at|from|to|since|until|till|during|between|and)\s*$",
        )
        .unwrap(),
    })
}

/// Strips temporal expressions and tidies the remainder. Repeated
/// application is a fixpoint, and the output is never longer than the
/// input.
pub fn scrub_temporal_text(s: &str) -> String {
    let r = rules();
    let mut text = s.to_string();
    // Removal and cleanup interleave to a fixpoint — cleanup can splice
    // text together (e.g. dropping empty brackets), so removals must get
    // another look at the spliced result. Every pass shrinks or keeps the
    // string, so this terminates.
    loop {
        let mut next = text.clone();
        for pat in &r.removals {
            next = pat.replace_all(&next, "").into_owned();
        }
        next = r.empty_brackets.replace_all(&next, "").into_owned();
        next = r.punct_runs.replace_all(&next, "$1").into_owned();
        next = r.space_runs.replace_all(&next, " ").into_owned();
        next = r.space_before_punct.replace_all(&next, "$1").into_owned();
        next = r.dangling_tail.replace_all(&next, "").into_owned();
        next = next
            .trim()
            .trim_matches(|c: char| matches!(c, ',' | ';' | ':' | '-' | '\u{2013}' | '\u{2014}'))
            .trim()
            .to_string();
        if next == text {
            return next;
        }
        text = next;
    }
}
