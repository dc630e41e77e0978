//! Part-of-speech filtering.
//!
//! The default tagger is a small heuristic: a closed-class lexicon, a short
//! open-class lexicon for frequent irregular words, then suffix rules. Any
//! other tagger can be plugged in through [`PosTagger`].

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    /// Determiners, pronouns, prepositions, conjunctions, numerals,
    /// interjections.
    Other,
}

impl PosTag {
    /// Content-word tags kept by the POS filter.
    pub fn is_content(self) -> bool {
        !matches!(self, PosTag::Other)
    }
}

pub trait PosTagger: Send + Sync {
    /// Tags one lowercased token.
    fn tag(&self, token: &str) -> PosTag;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicTagger;

const CLOSED_CLASS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "mine",
    "yours", "ours", "theirs", "myself", "yourself", "who", "whom", "whose", "which", "what",
    "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "of", "off",
    "over", "under", "and", "but", "or", "nor", "so", "yet", "if", "because", "while", "as",
    "until", "than", "whether", "oh", "wow", "hey", "ok", "okay", "lol", "yes", "no", "is",
    "am", "are", "was", "were", "be", "been", "being", "do", "does", "did", "have", "has",
    "had", "will", "would", "shall", "should", "can", "could", "may", "might", "must",
];

const VERBS: &[&str] = &[
    "want", "need", "wish", "like", "desire", "request", "look", "go", "get", "make", "take",
    "see", "know", "think", "come", "give", "find", "tell", "buy", "try", "say", "feel", "let",
    "keep", "put", "run", "eat", "drink", "love", "hate", "hope", "help", "play", "watch", "win",
    "went", "saw", "made", "took", "came", "gave", "found", "told", "bought", "said", "felt",
    "ate", "ran", "won",
];

const ADJECTIVES: &[&str] = &[
    "new", "good", "bad", "great", "best", "better", "big", "small", "old", "young", "happy",
    "sad", "hot", "cold", "nice", "cool", "free", "high", "low", "long", "short", "first",
    "last", "next", "little", "own", "other", "same", "able", "sure",
];

const ADVERBS: &[&str] = &[
    "very", "really", "not", "never", "always", "often", "soon", "now", "then", "here",
    "there", "still", "already", "again", "too", "also", "just", "today", "tomorrow",
    "tonight", "yesterday", "almost", "maybe",
];

impl PosTagger for HeuristicTagger {
    fn tag(&self, token: &str) -> PosTag {
        if token.chars().all(|c| c.is_numeric() || !c.is_alphanumeric()) {
            return PosTag::Other;
        }
        if CLOSED_CLASS.contains(&token) {
            return PosTag::Other;
        }
        if VERBS.contains(&token) {
            return PosTag::Verb;
        }
        if ADJECTIVES.contains(&token) {
            return PosTag::Adjective;
        }
        if ADVERBS.contains(&token) {
            return PosTag::Adverb;
        }
        let len = token.chars().count();
        if len > 3 && token.ends_with("ly") {
            PosTag::Adverb
        } else if len > 4 && (token.ends_with("ing") || token.ends_with("ed")) {
            PosTag::Verb
        } else if len > 4
            && ["ous", "ful", "able", "ible", "ive", "less", "ic", "al"]
                .iter()
                .any(|s| token.ends_with(s))
        {
            PosTag::Adjective
        } else if len > 4 && (token.ends_with("ize") || token.ends_with("ise") || token.ends_with("ate")) {
            PosTag::Verb
        } else {
            PosTag::Noun
        }
    }
}
