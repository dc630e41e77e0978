//! Short-text corpus: ingestion, seed-phrase labeling and preprocessing.

mod io;
pub mod pos;
pub mod stopwords;
pub mod tokenize;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use pos::{HeuristicTagger, PosTagger};
use stopwords::stopword_list;
pub use stopwords::{stopword_list_sorted, DEFAULT_STOPWORD_LIST_ID};

pub use io::{ingest_csv, ingest_jsonl, ingest_path, read_jsonl, write_jsonl};

/// Binary intention class. `Yes` is the positive class everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Yes, Label::No];

    /// Position in [`Label::ALL`]; used to index per-class count arrays.
    pub fn index(self) -> usize {
        match self {
            Label::Yes => 0,
            Label::No => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        Label::ALL[i]
    }

    pub fn other(self) -> Label {
        match self {
            Label::Yes => Label::No,
            Label::No => Label::Yes,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "Yes",
            Label::No => "No",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Yes" => Ok(Label::Yes),
            "No" => Ok(Label::No),
            other => Err(format!("label must be \"Yes\" or \"No\", got {other:?}")),
        }
    }
}

pub const UNKNOWN_LANG: &str = "unknown";

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub lang: String,
    /// Normalized terms; empty until [`preprocess`] has run.
    pub tokens: Vec<String>,
    pub label: Option<Label>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            raw_text: raw_text.into(),
            lang: UNKNOWN_LANG.to_string(),
            tokens: Vec::new(),
            label: None,
        }
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = lang.into();
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }
}

/// An ordered collection of documents with unique, nonempty ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in &docs {
            if doc.id.is_empty() {
                return Err(Error::EmptyId);
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Corpus { docs })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    pub fn n(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn label_space(&self) -> [Label; 2] {
        Label::ALL
    }

    /// Labels of every document, or the index of the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| d.label.ok_or(Error::UnlabeledRow(i)))
            .collect()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.docs.iter().all(|d| d.label.is_some())
    }

    /// `[yes, no, unlabeled]` counts.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for d in &self.docs {
            match d.label {
                Some(l) => counts[l.index()] += 1,
                None => counts[2] += 1,
            }
        }
        counts
    }
}

/// Phrases used to retrieve and label posts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SeedVector {
    phrases: Vec<String>,
}

pub const DEFAULT_SEEDS: [&str; 7] = ["wish", "want", "need", "look for", "request", "like", "desire"];

impl SeedVector {
    pub fn new<S: AsRef<str>>(phrases: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut out: Vec<String> = Vec::new();
        for p in phrases {
            let p = p.as_ref();
            let normalized = p.split_whitespace().collect::<Vec<_>>().join(" ");
            if normalized.is_empty() {
                return Err(Error::InvalidSeeds("empty phrase".into()));
            }
            if normalized != normalized.to_lowercase() {
                return Err(Error::InvalidSeeds(format!("phrase {p:?} is not lowercase")));
            }
            if out.contains(&normalized) {
                return Err(Error::InvalidSeeds(format!("duplicate phrase {normalized:?}")));
            }
            out.push(normalized);
        }
        if out.is_empty() {
            return Err(Error::InvalidSeeds("no phrases".into()));
        }
        Ok(SeedVector { phrases: out })
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// True when any phrase occurs as a contiguous run of whole tokens.
    pub fn matches(&self, tokens: &[String]) -> bool {
        self.phrases.iter().any(|phrase| {
            let words: Vec<&str> = phrase.split(' ').collect();
            tokens
                .windows(words.len())
                .any(|w| w.iter().zip(&words).all(|(a, b)| a == b))
        })
    }
}

impl Default for SeedVector {
    fn default() -> Self {
        SeedVector::new(DEFAULT_SEEDS).expect("default seeds are valid")
    }
}

impl TryFrom<Vec<String>> for SeedVector {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        SeedVector::new(v)
    }
}

impl From<SeedVector> for Vec<String> {
    fn from(s: SeedVector) -> Self {
        s.phrases
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub strip_urls: bool,
    pub lowercase: bool,
    pub remove_punct: bool,
    pub remove_stopwords: bool,
    pub pos_filter: bool,
    pub stopword_list_id: String,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            strip_urls: true,
            lowercase: true,
            remove_punct: true,
            remove_stopwords: true,
            pos_filter: false,
            stopword_list_id: DEFAULT_STOPWORD_LIST_ID.to_string(),
        }
    }
}

impl PreprocessConfig {
    /// Every flag off: tokens are the bare whitespace split.
    pub fn none() -> Self {
        PreprocessConfig {
            strip_urls: false,
            lowercase: false,
            remove_punct: false,
            remove_stopwords: false,
            pos_filter: false,
            ..Default::default()
        }
    }

    fn any_enabled(&self) -> bool {
        self.strip_urls || self.lowercase || self.remove_punct || self.remove_stopwords || self.pos_filter
    }
}

/// Keeps documents whose language code equals `lang`, in order.
pub fn filter_language(corpus: Corpus, lang: &str) -> Corpus {
    Corpus {
        docs: corpus.docs.into_iter().filter(|d| d.lang == lang).collect(),
    }
}

/// Labels every document `Yes` when a seed phrase appears in its normalized
/// token stream and `No` otherwise. Existing labels are overwritten.
pub fn label_by_seeds(corpus: Corpus, seeds: &SeedVector) -> Corpus {
    let docs = corpus
        .docs
        .into_par_iter()
        .map(|mut d| {
            let tokens = tokenize::normalized_tokens(&d.raw_text);
            d.label = Some(if seeds.matches(&tokens) { Label::Yes } else { Label::No });
            d
        })
        .collect();
    Corpus { docs }
}

/// Tokenizes with the built-in heuristic POS tagger.
pub fn preprocess(corpus: Corpus, config: &PreprocessConfig) -> Result<Corpus> {
    preprocess_with_tagger(corpus, config, &HeuristicTagger)
}

/// Populates `tokens` for every document; `raw_text` is left untouched.
///
/// Steps run in a fixed order: URL removal, lowercasing, punctuation
/// stripping, stopword removal, POS filtering. With every flag off the
/// tokens are the bare whitespace split. A document may end up empty.
pub fn preprocess_with_tagger(
    corpus: Corpus,
    config: &PreprocessConfig,
    tagger: &dyn PosTagger,
) -> Result<Corpus> {
    let stopwords = if config.remove_stopwords {
        Some(stopword_list(&config.stopword_list_id).ok_or_else(|| {
            Error::InvalidPreprocess(format!("unknown stopword list `{}`", config.stopword_list_id))
        })?)
    } else {
        None
    };
    if !config.any_enabled() {
        log::debug!("preprocess called with every flag off; using bare tokens");
    }

    let docs = corpus
        .docs
        .into_par_iter()
        .map(|mut d| {
            d.tokens = tokenize::bare_tokens(&d.raw_text)
                .into_iter()
                .filter(|t| !(config.strip_urls && tokenize::is_url(t)))
                .map(|t| if config.lowercase { t.to_lowercase() } else { t.to_string() })
                .filter_map(|t| {
                    if config.remove_punct {
                        tokenize::strip_punct(&t).map(str::to_string)
                    } else {
                        Some(t)
                    }
                })
                .filter(|t| match stopwords {
                    Some(list) => !list.contains(t.to_lowercase().as_str()),
                    None => true,
                })
                .filter(|t| !config.pos_filter || tagger.tag(&t.to_lowercase()).is_content())
                .collect();
            d
        })
        .collect();
    Ok(Corpus { docs })
}
