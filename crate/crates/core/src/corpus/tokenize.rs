//! Whitespace tokenization and token normalization helpers.

use std::sync::OnceLock;

use regex::Regex;

fn url_regex() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"(?i)(https?://|www\.)").expect("static regex"))
}

/// Splits on Unicode whitespace. No other transformation is applied.
pub fn bare_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// True when the token contains an http(s):// or www. URL.
pub fn is_url(token: &str) -> bool {
    url_regex().is_match(token)
}

/// Strips leading and trailing non-alphanumeric characters, which covers
/// punctuation as well as `#` / `@` prefixes. Returns `None` for tokens made
/// only of punctuation.
pub fn strip_punct(token: &str) -> Option<&str> {
    let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
    (!trimmed.is_empty()).then_some(trimmed)
}

/// The lowercased, punctuation-stripped token stream used for seed matching.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    bare_tokens(text)
        .into_iter()
        .filter_map(strip_punct)
        .map(str::to_lowercase)
        .collect()
}
