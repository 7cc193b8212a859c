//! Tag and free-text normalization shared by loading, indexing and querying.

use unicode_normalization::UnicodeNormalization;

/// Normalizes a single tag: NFC, lowercase, trimmed. Returns `None` when
/// nothing is left.
pub fn normalize_tag(raw: &str) -> Option<String> {
    let tag: String = raw.nfc().collect::<String>().to_lowercase();
    let tag = tag.trim();
    if tag.is_empty() {
        None
    } else {
        Some(tag.to_string())
    }
}

pub fn normalize_tags<I, S>(raw: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    raw.into_iter()
        .filter_map(|t| normalize_tag(t.as_ref()))
        .collect()
}

/// Splits titles, descriptions and query strings into terms. Anything that
/// is not alphanumeric separates terms.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
