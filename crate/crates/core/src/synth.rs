//! Synthetic intention corpus with planted seed phrases.
//!
//! Documents are split into blocks whose class balance equals the global
//! balance. Every document in a block carries all of that block's topic
//! words, so a topic word's document set is class-proportional and its
//! information gain is exactly zero. The only informative terms are the
//! planted seed words (in `Yes` documents) and a few "no-marker" words (in
//! `No` documents). Everything else in the text is noise that the default
//! preprocessing removes: stopwords, URLs, punctuation, case and hashtags.
//!
//! Label noise flips the same number of labels in each direction within a
//! block, which keeps the block balance, so the zero-gain property survives.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{stopword_list_sorted, Corpus, Document, Label, SeedVector, DEFAULT_STOPWORD_LIST_ID};
use crate::error::{Error, Result};

const TOPIC_WORDS: [&str; 128] = [
    "coffee", "phone", "laptop", "pizza", "weekend", "concert", "movie", "ticket", "flight", "hotel",
    "beach", "garden", "kitchen", "bicycle", "camera", "guitar", "jacket", "sneakers", "library", "museum",
    "station", "airport", "market", "bakery", "pharmacy", "doctor", "dentist", "teacher", "student", "office",
    "meeting", "deadline", "project", "report", "server", "printer", "keyboard", "monitor", "charger", "battery",
    "playlist", "podcast", "episode", "season", "trailer", "album", "festival", "stadium", "football", "basketball",
    "tennis", "marathon", "yoga", "gym", "protein", "salad", "burger", "noodles", "sushi", "dessert",
    "chocolate", "sandwich", "breakfast", "dinner", "lunch", "recipe", "oven", "fridge", "sofa", "blanket",
    "pillow", "curtain", "window", "balcony", "apartment", "landlord", "neighbor", "puppy", "kitten", "aquarium",
    "umbrella", "raincoat", "sunglasses", "backpack", "suitcase", "passport", "visa", "embassy", "border", "train",
    "subway", "taxi", "scooter", "highway", "bridge", "tunnel", "harbor", "island", "mountain", "forest",
    "river", "lake", "desert", "village", "city", "downtown", "suburb", "campus", "semester", "exam",
    "homework", "notebook", "pencil", "eraser", "calendar", "birthday", "wedding", "anniversary", "holiday", "vacation",
    "souvenir", "postcard", "stamp", "parcel", "courier", "invoice", "receipt", "wallet",
];

/// Words planted in `No` documents so every class has positive evidence.
pub const NO_MARKERS: [&str; 4] = ["finished", "watched", "yesterday", "bored"];

const URLS: [&str; 3] = ["https://t.co/x1y2z3", "http://bit.ly/abc123", "www.example.com/post"];
const PUNCT: [&str; 5] = ["!", "...", "?!", "-", ":)"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_yes: usize,
    pub n_no: usize,
    /// Fraction of labels flipped after planting.
    pub noise_rate: f64,
    pub seed: u64,
    pub seeds: SeedVector,
    /// Upper bound on the number of blocks; the actual count also divides
    /// gcd(n_yes, n_no).
    pub max_blocks: usize,
    pub topic_words_per_block: usize,
    pub lang: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_yes: 3452,
            n_no: 2444,
            noise_rate: 0.1,
            seed: 0,
            seeds: SeedVector::default(),
            max_blocks: 4,
            topic_words_per_block: 32,
            lang: "en".into(),
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_yes == 0 || self.n_no == 0 {
            return Err(Error::Config("synth needs both classes (n_yes, n_no >= 1)".into()));
        }
        if !(0.0..=0.5).contains(&self.noise_rate) {
            return Err(Error::Config(format!("noise_rate must lie in [0, 0.5], got {}", self.noise_rate)));
        }
        if self.max_blocks == 0 || self.topic_words_per_block == 0 {
            return Err(Error::Config("max_blocks and topic_words_per_block must be >= 1".into()));
        }
        if self.n_blocks() * self.topic_words_per_block > TOPIC_WORDS.len() {
            return Err(Error::Config(format!(
                "{} blocks x {} topic words exceeds the {} available",
                self.n_blocks(),
                self.topic_words_per_block,
                TOPIC_WORDS.len()
            )));
        }
        Ok(())
    }

    pub fn n_blocks(&self) -> usize {
        let g = gcd(self.n_yes, self.n_no);
        (1..=self.max_blocks.min(g)).rev().find(|d| g.is_multiple_of(*d)).unwrap_or(1)
    }

    /// Terms that carry signal after default preprocessing: the content
    /// words of each seed phrase and the no-markers.
    pub fn signal_terms(&self) -> Vec<String> {
        let stop = stopword_list_sorted(DEFAULT_STOPWORD_LIST_ID).expect("shipped list");
        let mut terms: Vec<String> = self
            .seeds
            .phrases()
            .iter()
            .flat_map(|p| p.split(' '))
            .filter(|w| stop.binary_search(w).is_err())
            .map(str::to_string)
            .chain(NO_MARKERS.iter().map(|w| w.to_string()))
            .collect();
        terms.sort();
        terms.dedup();
        terms
    }

    pub fn topic_words(&self) -> &'static [&'static str] {
        &TOPIC_WORDS[..self.n_blocks() * self.topic_words_per_block]
    }
}

fn decorate(word: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0 => format!("#{word}"),
        1 => {
            let mut c = word.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        }
        2 => word.to_uppercase(),
        3 => format!("{word},"),
        _ => word.to_string(),
    }
}

/// Generates the corpus. Ids are `synth-NNNNNN` in output order; all
/// documents are labeled.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let stop = stopword_list_sorted(DEFAULT_STOPWORD_LIST_ID).expect("shipped list");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let blocks = config.n_blocks();
    let (yes_per, no_per) = (config.n_yes / blocks, config.n_no / blocks);
    let flips = ((config.noise_rate * (yes_per + no_per) as f64 / 2.0).round() as usize).min(yes_per.min(no_per));
    let seeds = config.seeds.phrases();

    let mut docs: Vec<(String, Label)> = Vec::with_capacity(config.n_yes + config.n_no);
    for b in 0..blocks {
        let topic = &TOPIC_WORDS[b * config.topic_words_per_block..(b + 1) * config.topic_words_per_block];
        let mut block = Vec::with_capacity(yes_per + no_per);
        for i in 0..yes_per + no_per {
            let planted = i < yes_per;
            let mut words: Vec<String> = topic.iter().map(|w| decorate(w, &mut rng)).collect();
            let signal = if planted {
                seeds[rng.gen_range(0..seeds.len())].clone()
            } else {
                NO_MARKERS[rng.gen_range(0..NO_MARKERS.len())].to_string()
            };
            for _ in 0..rng.gen_range(3..9) {
                let w = stop[rng.gen_range(0..stop.len())];
                words.push(if rng.gen_bool(0.2) { w.to_uppercase() } else { w.to_string() });
            }
            if rng.gen_bool(0.3) {
                words.push(URLS[rng.gen_range(0..URLS.len())].to_string());
            }
            if rng.gen_bool(0.4) {
                words.push(PUNCT[rng.gen_range(0..PUNCT.len())].to_string());
            }
            words.shuffle(&mut rng);
            // Keep multi-word seeds contiguous.
            let at = rng.gen_range(0..=words.len());
            words.insert(at, signal);
            block.push((words.join(" "), if planted { Label::Yes } else { Label::No }));
        }
        // Symmetric flips: the first `flips` Yes rows and No rows of a
        // shuffled block swap labels.
        let mut yes_rows: Vec<usize> = (0..yes_per).collect();
        let mut no_rows: Vec<usize> = (yes_per..yes_per + no_per).collect();
        yes_rows.shuffle(&mut rng);
        no_rows.shuffle(&mut rng);
        for &i in yes_rows.iter().take(flips).chain(no_rows.iter().take(flips)) {
            block[i].1 = block[i].1.other();
        }
        docs.extend(block);
    }
    docs.shuffle(&mut rng);

    Corpus::new(
        docs.into_iter()
            .enumerate()
            .map(|(i, (text, label))| {
                Document::new(format!("synth-{:06}", i + 1), text)
                    .with_lang(config.lang.clone())
                    .with_label(label)
            })
            .collect(),
    )
}
