//! The shipped English stopword list.
//!
//! The list is closed-class English function words plus a handful of
//! microblog fillers (`rt`, `amp`, `lol`). It deliberately contains none of
//! the default seed words, so seed phrases survive stopword removal except
//! for the function word in "look for".

use std::collections::HashSet;
use std::sync::OnceLock;

/// Identifier of the embedded list. Bump when the list changes.
pub const DEFAULT_STOPWORD_LIST_ID: &str = "en-v1";

const EN_V1: &str = include_str!("stopwords_en_v1.txt");

fn en_v1() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| EN_V1.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

/// Looks up a shipped list by id.
pub fn stopword_list(id: &str) -> Option<&'static HashSet<&'static str>> {
    match id {
        DEFAULT_STOPWORD_LIST_ID => Some(en_v1()),
        _ => None,
    }
}

/// The list as a sorted slice, for deterministic iteration.
pub fn stopword_list_sorted(id: &str) -> Option<&'static [&'static str]> {
    static SORTED: OnceLock<Vec<&'static str>> = OnceLock::new();
    match id {
        DEFAULT_STOPWORD_LIST_ID => Some(SORTED.get_or_init(|| {
            let mut v: Vec<_> = en_v1().iter().copied().collect();
            v.sort_unstable();
            v
        })),
        _ => None,
    }
}
