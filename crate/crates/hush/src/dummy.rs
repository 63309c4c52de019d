//! Dummy-segment planning: indexing a decoy text corpus and drawing dummy
//! segments from it to realize a noise plan.
//!
//! The histogram-hiding noise η is made real by sending each provider
//! η[provider][word] extra text segments that each contain the vocabulary
//! word exactly once. Those segments come from a user-supplied decoy corpus,
//! split at the same clause granularity as the speech segmenter so dummies
//! are not trivially distinguishable by shape. Planning is deterministic in
//! the noise plan's seed, never hands the same corpus segment to the same
//! provider twice, and prices the injected words with a simple
//! speaking-rate × per-second cost model.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dp::NoisePlan;
use crate::segment::Segment;
use crate::text::{default_stopwords, stem, tokenize_surface, Vocabulary};

/// One unmet (provider, word) requirement from [`plan_dummies`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub word: String,
    pub provider: u32,
    pub needed: u64,
    pub available: u64,
}

/// Errors from dummy indexing, planning and pricing.
#[derive(Debug, thiserror::Error)]
pub enum DummyError {
    #[error(
        "noise plan covers {plan} vocabulary words but the vocabulary has {vocab}"
    )]
    VocabMismatch { plan: usize, vocab: usize },
    #[error("dummy corpus cannot satisfy the noise plan; extend it and retry ({} unmet requirements, first: {:?})", .0.len(), .0.first())]
    Shortfall(Vec<Shortfall>),
    #[error("cost model fields must be positive, got rate {rate} wps, price {price} USD/s")]
    BadCostModel { rate: f64, price: f64 },
}

/// Granularity at which the decoy corpus is split before indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitRule {
    /// Split on sentence-ending punctuation only (`.` `!` `?`).
    Sentence,
    /// Split on sentence punctuation plus clause separators (`,` `;` `:`) —
    /// the granularity the speech segmenter approximates.
    Clause,
}

impl SplitRule {
    fn is_break(self, ch: char) -> bool {
        matches!(ch, '.' | '!' | '?')
            || (self == SplitRule::Clause && matches!(ch, ',' | ';' | ':'))
    }
}

/// One indexed candidate text segment.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    text: String,
    /// Normalized vocabulary word this candidate realizes (occurs exactly
    /// once in the text).
    vocab_word: String,
    /// Total whitespace tokens, stop words included — the unit the cost
    /// model prices.
    word_count: u64,
}

/// An index from vocabulary word to decoy segments that can realize it,
/// with per-provider used-sets.
///
/// Every candidate contains its vocabulary word exactly once (so each
/// emitted dummy shifts the provider-visible histogram by exactly +1 on one
/// coordinate) and at most `k_max` non-stop words (so dummies match the
/// clause shape of real speech segments). Planning mutates the used-sets;
/// serialize planning calls per index. Read-only accessors are safe to
/// share.
#[derive(Debug, Clone, Default)]
pub struct DummyIndex {
    candidates: Vec<Candidate>,
    /// vocab word → indexes into `candidates`; lists are disjoint because
    /// each candidate contains exactly one vocabulary word.
    by_word: BTreeMap<String, Vec<usize>>,
    /// provider → candidate indexes already handed to that provider.
    used: BTreeMap<u32, BTreeSet<usize>>,
}

impl DummyIndex {
    /// Number of indexed candidates for `word` (used or not).
    pub fn candidate_count(&self, word: &str) -> usize {
        self.by_word.get(word).map_or(0, Vec::len)
    }

    /// Candidates for `word` not yet handed to `provider`.
    pub fn available(&self, word: &str, provider: u32) -> usize {
        let used = self.used.get(&provider);
        self.by_word.get(word).map_or(0, |ids| {
            ids.iter()
                .filter(|i| used.is_none_or(|u| !u.contains(i)))
                .count()
        })
    }

    /// Total candidates across all words.
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Words with at least one candidate.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.by_word.keys().map(String::as_str)
    }
}

/// Splits a decoy corpus into clause-level segments and indexes those that
/// can serve as dummies.
///
/// The corpus is split on punctuation per `rule`, then each clause is
/// greedily re-chunked so no chunk holds more than `k_max` non-stop words
/// (`k_max` = 0 disables capping). A chunk is indexed iff normalized
/// occurrences of vocabulary words across its tokens total exactly one —
/// chunks with none are useless, chunks with two or more would corrupt the
/// histogram arithmetic. An empty or vocabulary-free corpus yields an empty
/// index, which planning will surface as a shortfall.
pub fn index_corpus(corpus: &str, vocab: &Vocabulary, k_max: usize, rule: SplitRule) -> DummyIndex {
    let stop = default_stopwords();
    let mut index = DummyIndex::default();

    let mut clause: Vec<&str> = Vec::new();
    let flush = |raw_words: &mut Vec<&str>, index: &mut DummyIndex| {
        if raw_words.is_empty() {
            return;
        }
        // Greedy cap: close a chunk as soon as it holds k_max non-stop words.
        let mut chunk: Vec<&str> = Vec::new();
        let mut non_stop = 0usize;
        let mut chunks: Vec<Vec<&str>> = Vec::new();
        for &w in raw_words.iter() {
            chunk.push(w);
            let surface: String = w
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .collect::<String>()
                .to_lowercase();
            let is_stop = surface.is_empty() || stop.contains(&surface);
            if !is_stop {
                non_stop += 1;
                if k_max > 0 && non_stop == k_max {
                    chunks.push(std::mem::take(&mut chunk));
                    non_stop = 0;
                }
            }
        }
        if !chunk.is_empty() {
            chunks.push(chunk);
        }
        raw_words.clear();

        for words in chunks {
            let text = words.join(" ");
            let tokens = tokenize_surface(&text);
            let mut hits: Vec<String> = Vec::new();
            for t in &tokens {
                let normalized = stem(t);
                if vocab.contains(&normalized) {
                    hits.push(normalized);
                }
            }
            if hits.len() == 1 {
                let idx = index.candidates.len();
                let vocab_word = hits.pop().expect("exactly one hit");
                index.by_word.entry(vocab_word.clone()).or_default().push(idx);
                index.candidates.push(Candidate {
                    text,
                    vocab_word,
                    word_count: words.len() as u64,
                });
            }
        }
    };

    for piece in corpus.split_whitespace() {
        // A raw word may end with (or be) break punctuation; the break
        // closes the clause after the word joins it.
        let has_break = piece.chars().any(|c| rule.is_break(c));
        clause.push(piece);
        if has_break {
            flush(&mut clause, &mut index);
        }
    }
    flush(&mut clause, &mut index);
    index
}

/// Selects dummy segments realizing `plan`, one sequence per partition.
///
/// For each (partition, word) the planner shuffles that provider's unused
/// candidates with a stream derived from `plan.seed` and takes the first
/// η[partition][word], marking them used for that provider so no provider
/// ever receives the same corpus segment twice (other providers may reuse
/// it). If any requirement cannot be met the index is left untouched and
/// every unmet (word, provider, needed, available) is reported, so the
/// caller can extend the corpus and retry.
pub fn plan_dummies(
    index: &mut DummyIndex,
    plan: &NoisePlan,
    vocab: &Vocabulary,
) -> Result<Vec<Vec<Segment>>, DummyError> {
    if plan.vocab_size() != vocab.len() {
        return Err(DummyError::VocabMismatch {
            plan: plan.vocab_size(),
            vocab: vocab.len(),
        });
    }
    let words: Vec<&str> = vocab.words().collect();

    // Check the whole plan before mutating anything. Candidate lists are
    // disjoint across words and used-sets are per provider, so the per-pair
    // availability check is exact.
    let mut shortfalls = Vec::new();
    for (i, eta_i) in plan.eta.iter().enumerate() {
        for (w, &need) in eta_i.iter().enumerate() {
            let available = index.available(words[w], i as u32) as u64;
            if need > available {
                shortfalls.push(Shortfall {
                    word: words[w].to_string(),
                    provider: i as u32,
                    needed: need,
                    available,
                });
            }
        }
    }
    if !shortfalls.is_empty() {
        return Err(DummyError::Shortfall(shortfalls));
    }

    // Decorrelate the selection stream from the noise-sampling stream that
    // used the same seed directly.
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::with_capacity(plan.eta.len());
    for (i, eta_i) in plan.eta.iter().enumerate() {
        let provider = i as u32;
        let mut segments = Vec::new();
        let mut seq = 0usize;
        for (w, &need) in eta_i.iter().enumerate() {
            if need == 0 {
                continue;
            }
            let used = index.used.entry(provider).or_default();
            let mut pool: Vec<usize> = index.by_word[words[w]]
                .iter()
                .copied()
                .filter(|c| !used.contains(c))
                .collect();
            pool.shuffle(&mut rng);
            for &chosen in pool.iter().take(need as usize) {
                used.insert(chosen);
                let cand = &index.candidates[chosen];
                let mut seg = Segment::dummy(
                    format!("dummy-p{provider}-{seq:04}"),
                    cand.text.clone(),
                    cand.vocab_word.clone(),
                );
                seg.partition = Some(provider);
                segments.push(seg);
                seq += 1;
            }
        }
        out.push(segments);
    }
    Ok(out)
}

/// Word-rate and price assumptions used to cost the injected dummy text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Speaking rate the priced service assumes, words per second.
    pub speaking_rate_wps: f64,
    /// Price per second of audio, USD.
    pub price_per_second: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            speaking_rate_wps: 2.57,
            price_per_second: 0.0006,
        }
    }
}

impl CostModel {
    pub fn new(speaking_rate_wps: f64, price_per_second: f64) -> Result<Self, DummyError> {
        if !(speaking_rate_wps > 0.0) || !(price_per_second > 0.0) {
            return Err(DummyError::BadCostModel {
                rate: speaking_rate_wps,
                price: price_per_second,
            });
        }
        Ok(CostModel {
            speaking_rate_wps,
            price_per_second,
        })
    }
}

/// Priced noise overhead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCost {
    pub total_words: u64,
    /// USD, rounded to cents.
    pub usd: f64,
}

/// Total whitespace tokens (stop words included) across dummy segments —
/// the "extra words" unit the cost model prices.
pub fn dummy_word_count<'a>(segments: impl IntoIterator<Item = &'a Segment>) -> u64 {
    segments
        .into_iter()
        .filter(|s| s.is_dummy())
        .map(|s| {
            s.text
                .as_deref()
                .map_or(0, |t| t.split_whitespace().count() as u64)
        })
        .sum()
}

/// Prices `total_words` of injected dummy text: the words are spoken at the
/// model's rate and the resulting seconds billed per second, rounded to
/// cents.
pub fn noise_cost(total_words: u64, model: &CostModel) -> NoiseCost {
    let usd = total_words as f64 / model.speaking_rate_wps * model.price_per_second;
    NoiseCost {
        total_words,
        usd: (usd * 100.0).round() / 100.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{build_dist, sample_noise_plan};
    use crate::text::Provenance;
    use proptest::prelude::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_words(words.iter().map(|w| stem(w)), Provenance::FrequencyTop).unwrap()
    }

    fn plan_with(eta: Vec<Vec<u64>>, seed: u64) -> NoisePlan {
        NoisePlan {
            eta,
            seed,
            eps_eff: 1.0,
            delta_eff: 0.05,
            distance: 2,
        }
    }

    #[test]
    fn empty_or_vocab_free_corpus_yields_empty_index() {
        let v = vocab(&["cat", "dog"]);
        assert!(index_corpus("", &v, 4, SplitRule::Clause).is_empty());
        assert!(index_corpus("   \n\t ", &v, 4, SplitRule::Clause).is_empty());
        let idx = index_corpus("birds fly south. fish swim.", &v, 4, SplitRule::Clause);
        assert!(idx.is_empty());
    }

    #[test]
    fn indexes_one_candidate_per_clause_with_one_vocab_word() {
        let v = vocab(&["cat", "dog"]);
        let idx = index_corpus("the cat sat. the dog ran.", &v, 2, SplitRule::Clause);
        assert_eq!(idx.candidate_count("cat"), 1);
        assert_eq!(idx.candidate_count("dog"), 1);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.words().collect::<Vec<_>>(), vec!["cat", "dog"]);
    }

    #[test]
    fn chunks_with_zero_or_multiple_vocab_words_are_excluded() {
        let v = vocab(&["cat", "dog"]);
        // One chunk holding both vocabulary words: excluded.
        let idx = index_corpus("the cat chased the dog", &v, 10, SplitRule::Clause);
        assert!(idx.is_empty());
        // The same vocabulary word twice also corrupts counts: excluded.
        let idx = index_corpus("cat meets cat", &v, 10, SplitRule::Clause);
        assert_eq!(idx.candidate_count("cat"), 0);
    }

    #[test]
    fn clause_splitting_separates_vocab_words() {
        let v = vocab(&["cat", "dog"]);
        // With clause splitting the comma separates the two words into two
        // separate indexable segments.
        let idx = index_corpus("the cat sat, the dog ran", &v, 10, SplitRule::Clause);
        assert_eq!(idx.candidate_count("cat"), 1);
        assert_eq!(idx.candidate_count("dog"), 1);
        // Sentence-only splitting keeps them together → excluded.
        let idx = index_corpus("the cat sat, the dog ran", &v, 10, SplitRule::Sentence);
        assert!(idx.is_empty());
    }

    #[test]
    fn k_max_caps_non_stop_words_per_chunk() {
        let v = vocab(&["cat"]);
        // 6 non-stop words around one "cat"; k_max=2 splits the clause into
        // 3 chunks and exactly one of them holds "cat".
        let idx = index_corpus(
            "big red cat jumped over fences",
            &v,
            2,
            SplitRule::Clause,
        );
        assert_eq!(idx.candidate_count("cat"), 1);
        let provider = 0;
        assert_eq!(idx.available("cat", provider), 1);
        // Stop words don't count toward the cap.
        let v2 = vocab(&["dog"]);
        let idx2 = index_corpus("the dog and the bone", &v2, 2, SplitRule::Clause);
        assert_eq!(idx2.candidate_count("dog"), 1);
    }

    #[test]
    fn vocabulary_matching_is_stem_normalized() {
        // Vocabulary holds normalized forms; surface inflections must hit.
        let v = vocab(&["running"]); // stored as "run"
        let idx = index_corpus("she runs daily.", &v, 4, SplitRule::Clause);
        assert_eq!(idx.candidate_count("run"), 1);
    }

    #[test]
    fn zero_plan_plans_nothing() {
        let v = vocab(&["cat"]);
        let mut idx = index_corpus("the cat sat.", &v, 4, SplitRule::Clause);
        let plan = plan_with(vec![vec![0], vec![0]], 1);
        let out = plan_dummies(&mut idx, &plan, &v).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(Vec::is_empty));
    }

    #[test]
    fn plans_exactly_the_requested_counts() {
        let v = vocab(&["cat"]);
        let corpus = "a cat sat. my cat ran. that cat slept.";
        let mut idx = index_corpus(corpus, &v, 4, SplitRule::Clause);
        assert_eq!(idx.candidate_count("cat"), 3);
        let plan = plan_with(vec![vec![2]], 7);
        let out = plan_dummies(&mut idx, &plan, &v).unwrap();
        assert_eq!(out[0].len(), 2);
        let texts: Vec<_> = out[0].iter().map(|s| s.text.clone().unwrap()).collect();
        assert_ne!(texts[0], texts[1], "distinct corpus segments");
        for s in &out[0] {
            assert!(s.is_dummy());
            assert_eq!(s.vocab_word.as_deref(), Some("cat"));
            assert_eq!(s.partition, Some(0));
        }
        // Both marked used for provider 0.
        assert_eq!(idx.available("cat", 0), 1);
        assert_eq!(idx.available("cat", 1), 3, "other providers unaffected");
    }

    #[test]
    fn shortfall_reports_needed_and_available_and_leaves_index_clean() {
        let v = vocab(&["cat", "dog"]);
        let mut idx = index_corpus("the cat sat. the dog ran.", &v, 4, SplitRule::Clause);
        let plan = plan_with(vec![vec![2, 1]], 1);
        let err = plan_dummies(&mut idx, &plan, &v).unwrap_err();
        match err {
            DummyError::Shortfall(items) => {
                assert_eq!(items.len(), 1);
                assert_eq!(items[0].word, "cat");
                assert_eq!(items[0].provider, 0);
                assert_eq!(items[0].needed, 2);
                assert_eq!(items[0].available, 1);
            }
            other => panic!("expected shortfall, got {other:?}"),
        }
        // Atomic failure: nothing was consumed, a feasible retry succeeds.
        assert_eq!(idx.available("cat", 0), 1);
        assert_eq!(idx.available("dog", 0), 1);
        let ok = plan_dummies(&mut idx, &plan_with(vec![vec![1, 1]], 1), &v).unwrap();
        assert_eq!(ok[0].len(), 2);
    }

    #[test]
    fn same_candidate_reusable_across_providers_but_not_within_one() {
        let v = vocab(&["cat"]);
        let mut idx = index_corpus("the cat sat.", &v, 4, SplitRule::Clause);
        // Two providers each draw the single candidate: allowed.
        let plan = plan_with(vec![vec![1], vec![1]], 3);
        let out = plan_dummies(&mut idx, &plan, &v).unwrap();
        assert_eq!(out[0][0].text, out[1][0].text);
        // A second draw for either provider is now infeasible.
        let again = plan_dummies(&mut idx, &plan_with(vec![vec![1]], 4), &v);
        assert!(matches!(again, Err(DummyError::Shortfall(_))));
    }

    #[test]
    fn planning_is_deterministic_in_seed() {
        let v = vocab(&["cat"]);
        let corpus = "a cat sat. my cat ran. that cat slept. one cat ate. his cat hid.";
        let pick = |seed: u64| {
            let mut idx = index_corpus(corpus, &v, 4, SplitRule::Clause);
            plan_dummies(&mut idx, &plan_with(vec![vec![2]], seed), &v)
                .unwrap()
                .remove(0)
                .into_iter()
                .map(|s| s.text.unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(pick(11), pick(11));
        let other: Vec<_> = (0..20).map(pick).collect();
        assert!(
            other.iter().any(|p| p != &other[0]),
            "selection should vary across seeds"
        );
    }

    #[test]
    fn dummy_ids_are_unique_per_provider() {
        let v = vocab(&["cat", "dog"]);
        let corpus = "a cat sat. my cat ran. a dog barked. my dog ate.";
        let mut idx = index_corpus(corpus, &v, 4, SplitRule::Clause);
        let plan = plan_with(vec![vec![2, 1], vec![1, 2]], 9);
        let out = plan_dummies(&mut idx, &plan, &v).unwrap();
        for part in &out {
            let mut ids: Vec<_> = part.iter().map(|s| s.id.as_str()).collect();
            let before = ids.len();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), before);
        }
    }

    #[test]
    fn realizes_a_sampled_noise_plan_end_to_end() {
        let v = vocab(&["cat", "dog"]);
        let dist = build_dist(2.0, 0.2, 1).unwrap();
        let plan = sample_noise_plan(&dist, v.len(), 2, 99);
        // Build a corpus guaranteed to cover the plan.
        let max_need = plan.eta.iter().flatten().max().copied().unwrap_or(0) as usize;
        let mut corpus = String::new();
        for i in 0..max_need + 1 {
            corpus.push_str(&format!("number {i} cat here. number {i} dog there. "));
        }
        let mut idx = index_corpus(&corpus, &v, 6, SplitRule::Clause);
        let out = plan_dummies(&mut idx, &plan, &v).unwrap();
        for (i, part) in out.iter().enumerate() {
            for (w, word) in v.words().enumerate() {
                let got = part
                    .iter()
                    .filter(|s| s.vocab_word.as_deref() == Some(word))
                    .count() as u64;
                assert_eq!(got, plan.eta[i][w], "provider {i} word {word}");
            }
        }
    }

    #[test]
    fn cost_model_prices_known_word_counts() {
        let model = CostModel::default();
        assert_eq!(noise_cost(2915, &model).usd, 0.68);
        assert_eq!(noise_cost(23899, &model).usd, 5.58);
        assert_eq!(noise_cost(0, &model).usd, 0.0);
        assert_eq!(noise_cost(0, &model).total_words, 0);
    }

    #[test]
    fn cost_model_validates_inputs() {
        assert!(CostModel::new(2.57, 0.0006).is_ok());
        assert!(matches!(
            CostModel::new(0.0, 0.0006),
            Err(DummyError::BadCostModel { .. })
        ));
        assert!(matches!(
            CostModel::new(2.57, -1.0),
            Err(DummyError::BadCostModel { .. })
        ));
    }

    #[test]
    fn word_count_includes_stop_words() {
        let v = vocab(&["cat"]);
        let mut idx = index_corpus("the big cat sat on the mat.", &v, 10, SplitRule::Clause);
        let out = plan_dummies(&mut idx, &plan_with(vec![vec![1]], 1), &v).unwrap();
        assert_eq!(dummy_word_count(out[0].iter()), 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Random feasible plans are realized exactly: counts match, no
        /// candidate repeats within a provider, every emitted text holds
        /// its word exactly once.
        #[test]
        fn feasible_plans_realized_exactly(
            needs in proptest::collection::vec(
                proptest::collection::vec(0u64..4, 2),
                1..4,
            ),
            seed in 0u64..1000,
        ) {
            let v = vocab(&["cat", "dog"]);
            let max_need = needs.iter().flatten().max().copied().unwrap_or(0) as usize;
            let mut corpus = String::new();
            for i in 0..max_need {
                corpus.push_str(&format!("tag {i} cat here. tag {i} dog too. "));
            }
            let mut idx = index_corpus(&corpus, &v, 6, SplitRule::Clause);
            let plan = plan_with(needs.clone(), seed);
            let out = plan_dummies(&mut idx, &plan, &v).unwrap();
            for (i, part) in out.iter().enumerate() {
                let mut seen = std::collections::HashSet::new();
                for s in part {
                    prop_assert!(seen.insert(s.text.clone().unwrap()),
                        "provider {} received a duplicate segment", i);
                    let tokens = tokenize_surface(s.text.as_deref().unwrap());
                    let occ = tokens.iter().filter(|t| v.contains(&stem(t))).count();
                    prop_assert_eq!(occ, 1);
                }
                for (w, word) in v.words().enumerate() {
                    let got = part.iter()
                        .filter(|s| s.vocab_word.as_deref() == Some(word))
                        .count() as u64;
                    prop_assert_eq!(got, needs[i][w]);
                }
            }
        }
    }
}
