//! Tokenization, stemming, histograms, TF-IDF, and vocabulary estimation.
//!
//! The vocabulary 𝒱 is the set of words whose counts the pipeline promises
//! to hide. It is estimated from a rough local transcript: the most frequent
//! non-stop stems, plus stems whose TF-IDF against a baseline corpus marks
//! them as characteristic of this speaker, plus a seeded sample of
//! out-of-domain decoys, minus anything already scrubbed as sensitive.

pub mod stem;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{self, Write};
use std::sync::OnceLock;

pub use stem::stem;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Errors from tokenization and vocabulary estimation.
#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("configuration invalid: {0}")]
    InvalidConfig(String),
    #[error("baseline corpus is empty but a TF-IDF threshold is set")]
    EmptyBaseline,
    #[error("transcript has no usable tokens")]
    EmptyTranscript,
    #[error("ground truth has no tokens")]
    EmptyGroundTruth,
    #[error("duplicate vocabulary word {0:?}")]
    DuplicateWord(String),
    #[error("dictionary has {available} unused words, need {requested} out-of-domain words")]
    DictionaryTooSmall { requested: usize, available: usize },
    #[error("histogram length {got} does not match vocabulary size {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Built-in English stop-word list.
pub fn default_stopwords() -> &'static HashSet<String> {
    static STOPWORDS: OnceLock<HashSet<String>> = OnceLock::new();
    STOPWORDS.get_or_init(|| {
        include_str!("../data/stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    })
}

/// Knobs for normalization and vocabulary estimation.
#[derive(Debug, Clone)]
pub struct VocabConfig {
    /// Fraction `m` in (0, 1] of unique non-stop stems kept by frequency
    /// rank (at least one word is always kept).
    pub top_fraction: f64,
    /// TF-IDF threshold Δ; stems scoring at or above it against the baseline
    /// corpus join the vocabulary. `f64::INFINITY` disables the channel.
    pub tfidf_threshold: f64,
    /// Number of out-of-domain decoy words sampled from a dictionary.
    pub out_of_domain: usize,
    /// Words removed before stemming; tokens are matched post-surface
    /// normalization (lowercase, punctuation stripped).
    pub stopwords: HashSet<String>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            top_fraction: 1.0,
            tfidf_threshold: f64::INFINITY,
            out_of_domain: 0,
            stopwords: default_stopwords().clone(),
        }
    }
}

impl VocabConfig {
    fn validate(&self) -> Result<(), TextError> {
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(TextError::InvalidConfig(format!(
                "top_fraction must be in (0, 1], got {}",
                self.top_fraction
            )));
        }
        if self.tfidf_threshold.is_nan() || self.tfidf_threshold < 0.0 {
            return Err(TextError::InvalidConfig(format!(
                "tfidf_threshold must be non-negative, got {}",
                self.tfidf_threshold
            )));
        }
        Ok(())
    }
}

/// Lowercases and strips punctuation, keeping stop words and inflection:
/// `"Don't STOP, now."` → `["dont", "stop", "now"]`. This is the token
/// stream used for word error rate and for the attacker's language models.
pub fn tokenize_surface(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let token: String = raw
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect();
            (!token.is_empty()).then_some(token)
        })
        .collect()
}

/// Surface tokens with stop words removed and the rest stemmed:
/// `"The cats are running"` → `["cat", "run"]`. This is the token stream
/// histograms and vocabularies are built on.
pub fn tokenize_normalize(text: &str, cfg: &VocabConfig) -> Vec<String> {
    tokenize_surface(text)
        .into_iter()
        .filter(|t| !cfg.stopwords.contains(t))
        .map(|t| stem(&t))
        .collect()
}

/// How a word earned its place in the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Among the top fraction of stems by frequency in the transcript.
    FrequencyTop,
    /// TF-IDF against the baseline corpus at or above the threshold.
    TfIdf,
    /// Decoy sampled from an out-of-domain dictionary.
    OutOfDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub word: String,
    pub provenance: Provenance,
}

/// An ordered set of distinct vocabulary words with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VocabEntry>", into = "Vec<VocabEntry>")]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<VocabEntry>> for Vocabulary {
    type Error = TextError;
    fn try_from(entries: Vec<VocabEntry>) -> Result<Self, TextError> {
        Vocabulary::from_entries(entries)
    }
}

impl From<Vocabulary> for Vec<VocabEntry> {
    fn from(v: Vocabulary) -> Vec<VocabEntry> {
        v.entries
    }
}

impl Vocabulary {
    /// Builds a vocabulary, rejecting duplicate words.
    pub fn from_entries(entries: Vec<VocabEntry>) -> Result<Self, TextError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.word.clone(), i).is_some() {
                return Err(TextError::DuplicateWord(e.word.clone()));
            }
        }
        Ok(Vocabulary { entries, index })
    }

    /// Convenience constructor labelling every word with one provenance.
    /// Words are stored as given: the histogram pipeline compares them
    /// against *stemmed* tokens, so pass stems (estimation outputs already
    /// are; hand-built lists should use words the stemmer leaves alone).
    pub fn from_words<I, S>(words: I, provenance: Provenance) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_entries(
            words
                .into_iter()
                .map(|w| VocabEntry {
                    word: w.into(),
                    provenance,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    /// Index of `word` in this vocabulary, if present.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

/// Word counts over a fixed vocabulary (same order as the vocabulary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    words: Vec<String>,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(words: Vec<String>, counts: Vec<u64>) -> Result<Self, TextError> {
        if words.len() != counts.len() {
            return Err(TextError::LengthMismatch {
                expected: words.len(),
                got: counts.len(),
            });
        }
        Ok(Histogram { words, counts })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|i| self.counts[i])
    }

    /// Per-word sum with `extra` (e.g. planned noise counts); lengths must
    /// match.
    pub fn add_counts(&self, extra: &[u64]) -> Result<Histogram, TextError> {
        if extra.len() != self.counts.len() {
            return Err(TextError::LengthMismatch {
                expected: self.counts.len(),
                got: extra.len(),
            });
        }
        let counts = self
            .counts
            .iter()
            .zip(extra)
            .map(|(a, b)| a + b)
            .collect();
        Histogram::new(self.words.clone(), counts)
    }

    /// Writes `word,count` lines preceded by a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "word,count")?;
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w},{c}")?;
        }
        Ok(())
    }
}

/// Counts each token's occurrences against `vocab`; tokens outside the
/// vocabulary are ignored.
pub fn build_histogram(tokens: &[String], vocab: &Vocabulary) -> Histogram {
    let mut counts = vec![0u64; vocab.len()];
    for t in tokens {
        if let Some(i) = vocab.position(t) {
            counts[i] += 1;
        }
    }
    Histogram {
        words: vocab.words().map(str::to_string).collect(),
        counts,
    }
}

/// TF-IDF of each distinct token in `doc` against a baseline corpus:
/// `tf(w) * ln((1 + N) / (1 + df(w)))` with raw counts for `tf` and
/// document frequency `df` over the `N` baseline documents.
pub fn tfidf_scores(
    doc: &[String],
    baseline: &[Vec<String>],
) -> Result<HashMap<String, f64>, TextError> {
    if baseline.is_empty() {
        return Err(TextError::EmptyBaseline);
    }
    let n = baseline.len() as f64;
    let doc_sets: Vec<HashSet<&String>> = baseline
        .iter()
        .map(|d| d.iter().collect::<HashSet<_>>())
        .collect();
    let mut tf: HashMap<&String, usize> = HashMap::new();
    for t in doc {
        *tf.entry(t).or_insert(0) += 1;
    }
    Ok(tf
        .into_iter()
        .map(|(word, count)| {
            let df = doc_sets.iter().filter(|s| s.contains(word)).count() as f64;
            let score = count as f64 * ((1.0 + n) / (1.0 + df)).ln();
            (word.clone(), score)
        })
        .collect())
}

/// Estimates the vocabulary to hide from a rough transcript.
///
/// Membership channels, in order: the top `⌈m·U⌉` of the `U` unique
/// non-stop stems by frequency (ties broken alphabetically), stems with
/// TF-IDF ≥ Δ against `baseline_docs`, and `out_of_domain` decoys sampled
/// without replacement (seeded) from `dictionary`. Words already scrubbed
/// as sensitive are excluded from every channel: each phrase in `sensitive`
/// is normalized and all its stems are banned.
pub fn estimate_vocabulary(
    transcript: &str,
    baseline_docs: &[String],
    cfg: &VocabConfig,
    dictionary: &[String],
    sensitive: &[String],
    seed: u64,
) -> Result<Vocabulary, TextError> {
    cfg.validate()?;
    let tokens = tokenize_normalize(transcript, cfg);
    if tokens.is_empty() {
        return Err(TextError::EmptyTranscript);
    }
    let banned: HashSet<String> = sensitive
        .iter()
        .flat_map(|phrase| tokenize_normalize(phrase, cfg))
        .collect();

    let mut freq: HashMap<&String, usize> = HashMap::new();
    for t in &tokens {
        *freq.entry(t).or_insert(0) += 1;
    }
    let mut by_freq: Vec<(&String, usize)> = freq.iter().map(|(w, c)| (*w, *c)).collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let keep = ((cfg.top_fraction * by_freq.len() as f64).ceil() as usize)
        .clamp(1, by_freq.len());

    let mut entries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (word, _) in by_freq.iter().take(keep) {
        if banned.contains(*word) || !seen.insert((*word).clone()) {
            continue;
        }
        entries.push(VocabEntry {
            word: (*word).clone(),
            provenance: Provenance::FrequencyTop,
        });
    }

    if cfg.tfidf_threshold.is_finite() {
        let baseline_tokens: Vec<Vec<String>> = baseline_docs
            .iter()
            .map(|d| tokenize_normalize(d, cfg))
            .collect();
        let scores = tfidf_scores(&tokens, &baseline_tokens)?;
        let mut qualifying: Vec<(&String, f64)> = scores
            .iter()
            .filter(|(_, s)| **s >= cfg.tfidf_threshold)
            .map(|(w, s)| (w, *s))
            .collect();
        qualifying.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("TF-IDF scores are finite")
                .then_with(|| a.0.cmp(b.0))
        });
        for (word, _) in qualifying {
            if banned.contains(word) || !seen.insert(word.clone()) {
                continue;
            }
            entries.push(VocabEntry {
                word: word.clone(),
                provenance: Provenance::TfIdf,
            });
        }
    }

    if cfg.out_of_domain > 0 {
        let mut pool: Vec<String> = {
            let mut normalized: BTreeSet<String> = BTreeSet::new();
            for raw in dictionary {
                for t in tokenize_normalize(raw, cfg) {
                    if !banned.contains(&t) && !seen.contains(&t) {
                        normalized.insert(t);
                    }
                }
            }
            normalized.into_iter().collect()
        };
        if pool.len() < cfg.out_of_domain {
            return Err(TextError::DictionaryTooSmall {
                requested: cfg.out_of_domain,
                available: pool.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.shuffle(&mut rng);
        for word in pool.into_iter().take(cfg.out_of_domain) {
            seen.insert(word.clone());
            entries.push(VocabEntry {
                word,
                provenance: Provenance::OutOfDomain,
            });
        }
    }

    Vocabulary::from_entries(entries)
}

/// Vocabulary coverage against ground truth tokens (already normalized).
///
/// Returns `(d_acc, d_weighted)`: the fraction of unique ground-truth words
/// the estimate contains, and the frequency-weighted variant
/// `Σ_w P(w)·1[w ∈ estimate] / |unique|` where `P(w)` is w's relative
/// frequency in the ground truth.
pub fn vocab_accuracy(
    estimated: &Vocabulary,
    ground_truth: &[String],
) -> Result<(f64, f64), TextError> {
    if ground_truth.is_empty() {
        return Err(TextError::EmptyGroundTruth);
    }
    let unique: BTreeSet<&String> = ground_truth.iter().collect();
    let total = ground_truth.len() as f64;
    let mut hits = 0usize;
    let mut weighted = 0.0;
    for word in &unique {
        if estimated.contains(word) {
            hits += 1;
            let count = ground_truth.iter().filter(|t| *t == *word).count();
            weighted += count as f64 / total;
        }
    }
    let u = unique.len() as f64;
    Ok((hits as f64 / u, weighted / u))
}
