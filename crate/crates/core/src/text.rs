//! Text normalization shared by every component that compares strings.
//!
//! Stored text is never modified; callers normalize on demand.

use unicode_normalization::UnicodeNormalization;

/// NFC, lowercase, whitespace runs collapsed to one space, trimmed.
/// Punctuation is preserved.
pub fn normalize_keep_punct(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Full normalization: [`normalize_keep_punct`] followed by stripping
/// leading and trailing punctuation.
pub fn normalize(text: &str) -> String {
    let kept = normalize_keep_punct(text);
    kept.trim_matches(|c: char| !c.is_alphanumeric() && !c.is_whitespace())
        .trim()
        .to_string()
}

/// Splits normalized text on runs of non-alphanumeric characters.
pub fn alnum_terms(text: &str) -> Vec<String> {
    normalize_keep_punct(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
