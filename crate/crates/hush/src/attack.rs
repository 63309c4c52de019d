//! Adversary-side indistinguishability probes: an add-α smoothed n-gram
//! language model, a most-probable-next-segment attack, and a greedy
//! re-ordering attack scored by normalized Kendall tau.

use std::collections::{BTreeSet, HashMap};

use crate::eval::kendall_tau_norm;
use crate::segment::SegmentId;
use crate::text::tokenize_surface;

/// Token standing in for anything outside the training vocabulary.
pub const UNK: &str = "<unk>";
/// Start-of-sequence padding used to fill short contexts.
const PAD: &str = "<s>";

/// Errors from language-model training and the attacks built on it.
#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1, got {0}")]
    BadOrder(usize),
    #[error("smoothing constant must be positive and finite, got {0}")]
    BadSmoothing(f64),
    #[error("cannot score an empty token sequence")]
    EmptyText,
    #[error("need at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("scoring failed: {0}")]
    Score(String),
}

/// Add-α smoothed n-gram model over a fixed training vocabulary plus one
/// unknown type. Immutable after training.
#[derive(Debug, Clone)]
pub struct NgramModel {
    n: usize,
    alpha: f64,
    /// context (n−1 tokens) → continuation → count.
    ngram_counts: HashMap<Vec<String>, HashMap<String, u64>>,
    /// context → total continuations observed (= Σ over the inner map).
    context_counts: HashMap<Vec<String>, u64>,
    vocab: BTreeSet<String>,
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of outcome types: training vocabulary plus the unknown token.
    pub fn outcome_count(&self) -> usize {
        self.vocab.len() + 1
    }

    fn normalize<'a>(&self, token: &'a str) -> &'a str {
        if self.vocab.contains(token) {
            token
        } else {
            UNK
        }
    }

    /// Smoothed P(token | context). `context` holds the preceding tokens in
    /// natural order; only the last n−1 matter, and short contexts are padded
    /// at the front. Out-of-vocabulary tokens (in the context or the outcome)
    /// collapse to [`UNK`]. Always strictly positive.
    pub fn prob(&self, context: &[String], token: &str) -> f64 {
        let need = self.n - 1;
        let mut key: Vec<String> = Vec::with_capacity(need);
        for _ in context.len()..need {
            key.push(PAD.to_string());
        }
        for t in context.iter().skip(context.len().saturating_sub(need)) {
            key.push(self.normalize(t).to_string());
        }
        let token = self.normalize(token);
        let v_bar = self.outcome_count() as f64;
        let joint = self
            .ngram_counts
            .get(&key)
            .and_then(|m| m.get(token))
            .copied()
            .unwrap_or(0) as f64;
        let ctx = self.context_counts.get(&key).copied().unwrap_or(0) as f64;
        (joint + self.alpha) / (ctx + self.alpha * v_bar)
    }
}

/// Trains an order-`n` model with add-α smoothing on pre-tokenized sequences.
/// Deterministic: counts are exact and the vocabulary is the set of training
/// tokens.
pub fn train_ngram(
    corpus: &[Vec<String>],
    n: usize,
    alpha: f64,
) -> Result<NgramModel, AttackError> {
    if corpus.is_empty() || corpus.iter().all(Vec::is_empty) {
        return Err(AttackError::EmptyCorpus);
    }
    if n == 0 {
        return Err(AttackError::BadOrder(n));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(AttackError::BadSmoothing(alpha));
    }
    let mut ngram_counts: HashMap<Vec<String>, HashMap<String, u64>> = HashMap::new();
    let mut context_counts: HashMap<Vec<String>, u64> = HashMap::new();
    let mut vocab = BTreeSet::new();
    for seq in corpus {
        let mut window: Vec<String> = vec![PAD.to_string(); n - 1];
        for token in seq {
            vocab.insert(token.clone());
            *ngram_counts
                .entry(window.clone())
                .or_default()
                .entry(token.clone())
                .or_insert(0) += 1;
            *context_counts.entry(window.clone()).or_insert(0) += 1;
            if n > 1 {
                window.remove(0);
                window.push(token.clone());
            }
        }
    }
    Ok(NgramModel {
        n,
        alpha,
        ngram_counts,
        context_counts,
        vocab,
    })
}

/// Perplexity of a token sequence: exp(−(1/L)·Σ ln P(token | context)).
pub fn perplexity(model: &NgramModel, tokens: &[String]) -> Result<f64, AttackError> {
    if tokens.is_empty() {
        return Err(AttackError::EmptyText);
    }
    let mut log_sum = 0.0f64;
    for (i, token) in tokens.iter().enumerate() {
        log_sum += model.prob(&tokens[..i], token).ln();
    }
    Ok((-log_sum / tokens.len() as f64).exp())
}

/// Perplexity of `known ++ candidate`; +∞ when both tokenize to nothing, so
/// empty stitches never win an argmin.
fn stitch_score(model: &NgramModel, known: &[String], candidate: &str) -> f64 {
    let mut stitched = known.to_vec();
    stitched.extend(tokenize_surface(candidate));
    match perplexity(model, &stitched) {
        Ok(p) => p,
        Err(_) => f64::INFINITY,
    }
}

/// Picks the candidate whose text most plausibly continues `known`: argmin
/// of stitched perplexity, ties broken by smaller id. Deterministic.
pub fn next_segment_attack(
    known: &str,
    candidates: &[(SegmentId, String)],
    model: &NgramModel,
) -> Result<SegmentId, AttackError> {
    if candidates.len() < 2 {
        return Err(AttackError::TooFewCandidates(candidates.len()));
    }
    let known_tokens = tokenize_surface(known);
    let mut best: Option<(f64, &SegmentId)> = None;
    for (id, text) in candidates {
        let score = stitch_score(model, &known_tokens, text);
        let better = match &best {
            None => true,
            Some((bs, bid)) => score < *bs || (score == *bs && id < *bid),
        };
        if better {
            best = Some((score, id));
        }
    }
    Ok(best.expect("candidates checked non-empty").1.clone())
}

/// Greedy re-ordering: starting from the known `first` text, repeatedly
/// appends the remaining pool segment with the lowest stitched perplexity
/// against the most recently chosen text. Every pool segment is used exactly
/// once; the returned order covers the whole pool.
pub fn reorder_attack(
    first: &str,
    pool: &[(SegmentId, String)],
    model: &NgramModel,
) -> Result<Vec<SegmentId>, AttackError> {
    if pool.is_empty() {
        return Err(AttackError::EmptyPool);
    }
    let mut remaining: Vec<&(SegmentId, String)> = pool.iter().collect();
    let mut chain = Vec::with_capacity(pool.len());
    let mut current = tokenize_surface(first);
    while !remaining.is_empty() {
        let mut best: Option<(f64, usize)> = None;
        for (k, (id, text)) in remaining.iter().enumerate() {
            let score = stitch_score(model, &current, text);
            let better = match &best {
                None => true,
                Some((bs, bk)) => {
                    score < *bs || (score == *bs && *id < remaining[*bk].0)
                }
            };
            if better {
                best = Some((score, k));
            }
        }
        let (_, k) = best.expect("remaining non-empty");
        let (id, text) = remaining.remove(k);
        current = tokenize_surface(text);
        chain.push(id.clone());
    }
    Ok(chain)
}

/// Scores a recovered ordering against the original: drops ids not present
/// in `original` (the dummies), maps the rest to their original ranks, and
/// returns the normalized Kendall tau of that permutation. 0 means fully
/// recovered, ≈0.5 means indistinguishable from a random shuffle.
pub fn recovered_tau(
    chain: &[SegmentId],
    original: &[SegmentId],
) -> Result<f64, AttackError> {
    let position: HashMap<&SegmentId, usize> =
        original.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let kept: Vec<usize> = chain.iter().filter_map(|id| position.get(id).copied()).collect();
    let mut sorted = kept.clone();
    sorted.sort_unstable();
    let ranks: Vec<usize> = kept
        .iter()
        .map(|v| sorted.binary_search(v).expect("value came from the list"))
        .collect();
    kendall_tau_norm(&ranks).map_err(|e| AttackError::Score(e.to_string()))
}
