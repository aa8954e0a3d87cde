//! String normalization shared by gold loading, decoding and scoring.

/// Lowercases and collapses every whitespace run to a single space, trimming
/// both ends. Idempotent.
pub fn canonicalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}
