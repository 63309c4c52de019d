//! Utility and privacy metrics: word error rate, rank distance, histogram
//! distance, stylometric distance, optimal topic matching, and the analytic
//! lower bound on how far histogram noise must push a topic model.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::{default_stopwords, tokenize_surface, Histogram};

/// Errors from metric computation.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("reference token sequence is empty")]
    EmptyReference,
    #[error("sequence is not a permutation: duplicate value {0}")]
    NotAPermutation(usize),
    #[error("histograms cover different vocabularies")]
    HistogramMismatch,
    #[error("feature vectors have different lengths ({0} vs {1})")]
    VectorLengthMismatch(usize, usize),
    #[error("cost matrix must be square, row {row} has {got} entries for {n} rows")]
    NonSquareMatrix { row: usize, got: usize, n: usize },
    #[error("cost matrix entries must be finite")]
    NonFiniteCost,
    #[error("topic models have different topic counts ({0} vs {1})")]
    TopicCountMismatch(usize, usize),
    #[error("invalid topic model: {0}")]
    BadTopicModel(String),
    #[error("invalid bound inputs: {0}")]
    BadBoundInputs(String),
    #[error("k·t = {kt} exceeds the largest document size {d_max}")]
    KTooLarge { kt: u64, d_max: u64 },
    #[error("cannot extract {t} topics over {vocab} distinct non-stop words")]
    CorpusTooSmall { t: usize, vocab: usize },
}

// ---------------------------------------------------------------------------
// Word error rate
// ---------------------------------------------------------------------------

/// Word error rate: minimal (deletions + substitutions + insertions) to
/// turn `reference` into `hypothesis`, divided by the reference length.
/// Unit-cost Levenshtein over tokens; may exceed 1 when the hypothesis is
/// much longer than the reference.
pub fn wer<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> Result<f64, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let n = reference.len();
    let m = hypothesis.len();
    // Rolling single-row DP.
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for i in 1..=n {
        cur[0] = i;
        for j in 1..=m {
            let sub = if reference[i - 1].as_ref() == hypothesis[j - 1].as_ref() {
                0
            } else {
                1
            };
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + sub);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m] as f64 / n as f64)
}

/// Tokenizes transcripts for [`wer`]: lowercase, punctuation stripped,
/// surface forms (no stemming).
pub fn wer_tokens(text: &str) -> Vec<String> {
    tokenize_surface(text)
}

// ---------------------------------------------------------------------------
// Kendall tau rank distance
// ---------------------------------------------------------------------------

/// Normalized Kendall tau rank distance of a recovered ordering: discordant
/// pairs / C(n,2); 0 for perfect order, 1 for full reversal. Values must be
/// distinct; fewer than two items have no pair order to violate → 0.
pub fn kendall_tau_norm(perm: &[usize]) -> Result<f64, EvalError> {
    let mut seen = BTreeSet::new();
    for &v in perm {
        if !seen.insert(v) {
            return Err(EvalError::NotAPermutation(v));
        }
    }
    let n = perm.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut discordant = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if perm[i] > perm[j] {
                discordant += 1;
            }
        }
    }
    Ok(discordant as f64 / (n * (n - 1) / 2) as f64)
}

// ---------------------------------------------------------------------------
// Histogram distance
// ---------------------------------------------------------------------------

/// ℓ1 distance between two histograms over the same vocabulary.
pub fn histogram_l1(h1: &Histogram, h2: &Histogram) -> Result<u64, EvalError> {
    if h1.words() != h2.words() {
        return Err(EvalError::HistogramMismatch);
    }
    Ok(h1
        .counts()
        .iter()
        .zip(h2.counts())
        .map(|(&a, &b)| a.abs_diff(b))
        .sum())
}

// ---------------------------------------------------------------------------
// Stylometry
// ---------------------------------------------------------------------------

/// How many of each text's most frequent words enter the shared basis.
const STYLOMETRY_TOP_WORDS: usize = 200;

/// Shared word basis for a pair of texts: the union of each text's top-200
/// most frequent surface words, sorted for determinism.
pub fn stylometry_basis(a: &str, b: &str) -> Vec<String> {
    let top = |text: &str| -> Vec<String> {
        let tokens = tokenize_surface(text);
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in &tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        let mut items: Vec<(&str, u64)> = counts.into_iter().collect();
        items.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(y.0)));
        items
            .into_iter()
            .take(STYLOMETRY_TOP_WORDS)
            .map(|(w, _)| w.to_string())
            .collect()
    };
    let mut basis: BTreeSet<String> = top(a).into_iter().collect();
    basis.extend(top(b));
    basis.into_iter().collect()
}

/// Stylometric feature vector of a text over a word basis:
/// `[mean word length, punctuation count, special-character count,
/// relative frequency of each basis word]`.
pub fn stylometry_vector(text: &str, basis: &[String]) -> Vec<f64> {
    let raw_tokens: Vec<&str> = text.split_whitespace().collect();
    let mean_len = if raw_tokens.is_empty() {
        0.0
    } else {
        raw_tokens.iter().map(|t| t.chars().count()).sum::<usize>() as f64
            / raw_tokens.len() as f64
    };
    let is_punct = |c: char| matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '\'' | '"');
    let punct = text.chars().filter(|&c| is_punct(c)).count() as f64;
    let special = text
        .chars()
        .filter(|&c| !c.is_alphanumeric() && !c.is_whitespace() && !is_punct(c))
        .count() as f64;

    let tokens = tokenize_surface(text);
    let total = tokens.len().max(1) as f64;
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in &tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut v = Vec::with_capacity(3 + basis.len());
    v.push(mean_len);
    v.push(punct);
    v.push(special);
    for w in basis {
        v.push(counts.get(w.as_str()).copied().unwrap_or(0) as f64 / total);
    }
    v
}

/// ℓ2 distance between two equal-length feature vectors.
pub fn stylometry_l2(v1: &[f64], v2: &[f64]) -> Result<f64, EvalError> {
    if v1.len() != v2.len() {
        return Err(EvalError::VectorLengthMismatch(v1.len(), v2.len()));
    }
    Ok(v1
        .iter()
        .zip(v2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Stylometric distance between two texts over their shared basis.
pub fn stylometry_distance(a: &str, b: &str) -> f64 {
    let basis = stylometry_basis(a, b);
    let va = stylometry_vector(a, &basis);
    let vb = stylometry_vector(b, &basis);
    stylometry_l2(&va, &vb).expect("vectors share the basis")
}

// ---------------------------------------------------------------------------
// Optimal assignment (Hungarian algorithm)
// ---------------------------------------------------------------------------

/// Minimum-cost perfect matching on a square cost matrix. Returns
/// `(assignment, total)` where `assignment[row] = column`. O(n³)
/// potentials-and-augmenting-paths formulation; exact.
pub fn hungarian_match(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64), EvalError> {
    let n = cost.len();
    for (row, r) in cost.iter().enumerate() {
        if r.len() != n {
            return Err(EvalError::NonSquareMatrix {
                row,
                got: r.len(),
                n,
            });
        }
        if r.iter().any(|c| !c.is_finite()) {
            return Err(EvalError::NonFiniteCost);
        }
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }

    // 1-indexed potentials; p[j] = row matched to column j (0 = none).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    Ok((assignment, total))
}

// ---------------------------------------------------------------------------
// Topic models
// ---------------------------------------------------------------------------

/// One topic: a probability distribution over words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub weights: BTreeMap<String, f64>,
}

/// A set of topics with a minimum-support requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    topics: Vec<Topic>,
    /// Minimum positive-weight words per topic.
    k: usize,
}

impl TopicModel {
    /// Validates that every topic sums to 1 (±1e−9) and has at least `k`
    /// positive-weight words.
    pub fn new(topics: Vec<Topic>, k: usize) -> Result<Self, EvalError> {
        if topics.is_empty() {
            return Err(EvalError::BadTopicModel("no topics".into()));
        }
        for (i, t) in topics.iter().enumerate() {
            let sum: f64 = t.weights.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(EvalError::BadTopicModel(format!(
                    "topic {i} weights sum to {sum}, expected 1"
                )));
            }
            if t.weights.values().any(|&w| w < 0.0) {
                return Err(EvalError::BadTopicModel(format!(
                    "topic {i} has a negative weight"
                )));
            }
            let positive = t.weights.values().filter(|&&w| w > 0.0).count();
            if positive < k {
                return Err(EvalError::BadTopicModel(format!(
                    "topic {i} has {positive} positive-weight words, need ≥ {k}"
                )));
            }
        }
        Ok(TopicModel { topics, k })
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn min_words(&self) -> usize {
        self.k
    }
}

/// ℓ1 distance between two word distributions over the union of their
/// supports (absent words weigh 0); lies in [0, 2].
fn topic_l1(a: &Topic, b: &Topic) -> f64 {
    let mut dist = 0.0;
    for (w, &pa) in &a.weights {
        dist += (pa - b.weights.get(w).copied().unwrap_or(0.0)).abs();
    }
    for (w, &pb) in &b.weights {
        if !a.weights.contains_key(w) {
            dist += pb;
        }
    }
    dist
}

/// Per-pair topic distances after optimal matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTopicDistances {
    /// `assignment[i]` = index in the second model matched to topic `i`.
    pub assignment: Vec<usize>,
    /// ℓ1 distance of each matched pair, indexed like `assignment`.
    pub distances: Vec<f64>,
}

impl MatchedTopicDistances {
    pub fn total(&self) -> f64 {
        self.distances.iter().sum()
    }
}

/// Embeds both models in their union word basis, matches topics optimally
/// by pairwise ℓ1 cost, and reports the matched distances.
pub fn topic_distance(
    a: &TopicModel,
    b: &TopicModel,
) -> Result<MatchedTopicDistances, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::TopicCountMismatch(a.len(), b.len()));
    }
    let cost: Vec<Vec<f64>> = a
        .topics()
        .iter()
        .map(|ta| b.topics().iter().map(|tb| topic_l1(ta, tb)).collect())
        .collect();
    let (assignment, _) = hungarian_match(&cost)?;
    let distances = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .collect();
    Ok(MatchedTopicDistances {
        assignment,
        distances,
    })
}

// ---------------------------------------------------------------------------
// Local topic extractor
// ---------------------------------------------------------------------------

/// Extracts `t` topics from documents with seeded non-negative matrix
/// factorization: bag-of-words counts over non-stop surface words,
/// multiplicative updates for a fixed iteration budget, rows of the word
/// factor normalized into distributions. Deterministic in `seed`. The
/// metric operations don't care where a model came from; this extractor
/// exists so topic distances can be computed fully locally.
pub fn extract_topics(
    docs: &[String],
    t: usize,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<TopicModel, EvalError> {
    let stop = default_stopwords();
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    let mut doc_tokens: Vec<Vec<String>> = Vec::with_capacity(docs.len());
    for d in docs {
        let toks: Vec<String> = tokenize_surface(d)
            .into_iter()
            .filter(|w| !stop.contains(w))
            .collect();
        vocab.extend(toks.iter().cloned());
        doc_tokens.push(toks);
    }
    let words: Vec<String> = vocab.into_iter().collect();
    if t == 0 || words.len() < t || words.len() < k || docs.is_empty() {
        return Err(EvalError::CorpusTooSmall {
            t,
            vocab: words.len(),
        });
    }
    let index: HashMap<&str, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let (nd, nw) = (docs.len(), words.len());
    let mut counts = vec![vec![0.0f64; nw]; nd];
    for (d, toks) in doc_tokens.iter().enumerate() {
        for tok in toks {
            counts[d][index[tok.as_str()]] += 1.0;
        }
    }

    // Multiplicative-update factorization counts ≈ doc_topic · topic_word.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dt = vec![vec![0.0f64; t]; nd]; // document → topic loadings
    let mut tw = vec![vec![0.0f64; nw]; t]; // topic → word weights
    for row in dt.iter_mut().chain(tw.iter_mut()) {
        for x in row.iter_mut() {
            *x = rng.gen_range(0.1..1.0);
        }
    }
    const GUARD: f64 = 1e-12;
    for _ in 0..iterations {
        // tw ← tw ∘ (dtᵀ·counts) / (dtᵀ·dt·tw)
        let mut dtt_dt = vec![vec![0.0f64; t]; t];
        for a in 0..t {
            for b in 0..t {
                dtt_dt[a][b] = (0..nd).map(|d| dt[d][a] * dt[d][b]).sum();
            }
        }
        for a in 0..t {
            for w in 0..nw {
                let num: f64 = (0..nd).map(|d| dt[d][a] * counts[d][w]).sum();
                let den: f64 = (0..t).map(|b| dtt_dt[a][b] * tw[b][w]).sum::<f64>() + GUARD;
                tw[a][w] *= num / den;
            }
        }
        // dt ← dt ∘ (counts·twᵀ) / (dt·tw·twᵀ)
        let mut tw_twt = vec![vec![0.0f64; t]; t];
        for a in 0..t {
            for b in 0..t {
                tw_twt[a][b] = (0..nw).map(|w| tw[a][w] * tw[b][w]).sum();
            }
        }
        for d in 0..nd {
            for a in 0..t {
                let num: f64 = (0..nw).map(|w| counts[d][w] * tw[a][w]).sum();
                let den: f64 = (0..t).map(|b| dt[d][b] * tw_twt[b][a]).sum::<f64>() + GUARD;
                dt[d][a] *= num / den;
            }
        }
    }

    let topics = tw
        .into_iter()
        .map(|row| {
            let sum: f64 = row.iter().sum();
            let weights = words
                .iter()
                .cloned()
                .zip(row.into_iter().map(|x| x / sum.max(GUARD)))
                .collect();
            Topic { weights }
        })
        .collect();
    TopicModel::new(topics, k)
}

// ---------------------------------------------------------------------------
// Topic-distance lower bound
// ---------------------------------------------------------------------------

/// Word-count profile of one document in the release.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentProfile {
    /// Total words in the document, |D_j|.
    pub size: u64,
    /// Repetition factor ω_j of the document's tracked words.
    pub omega: u64,
    /// Count |w_{l,j}| of each tracked word l in the document.
    pub word_counts: Vec<u64>,
}

/// Inputs to the lower bound on matched topic distance under noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Number of topics t ≥ 1.
    pub t: u64,
    /// Minimum words per topic k ≥ 1.
    pub k: u64,
    pub docs: Vec<DocumentProfile>,
    /// Noise variance v from the histogram-hiding mechanism (exact table
    /// summation, not the closed form).
    pub noise_variance: f64,
}

/// The evaluated lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// C_min = min over (document, word) of
    /// v(|D_j| − |w_{l,j}|ω_j) / (|D_j|(|D_j| + vω_j)).
    pub c_min: f64,
    /// The bound itself; the matched topic ℓ1 distance is ≥ this value.
    pub value: f64,
    /// True when the bound is ≤ 0 and therefore says nothing (any
    /// distance is ≥ a non-positive number).
    pub vacuous: bool,
}

/// Evaluates the analytic lower bound on the matched ℓ1 distance between
/// the original topic model and one extracted after histogram noise of
/// variance `v`:
///
/// `bound = 2/(1 − (t−1)k/D_max) · (C_min/t − (1/t)(1 − t·k/D_max))`
///
/// with `D_max = max_j |D_j|`. Negative values are reported as vacuous
/// rather than clamped.
pub fn topic_distance_lower_bound(inputs: &BoundInputs) -> Result<BoundReport, EvalError> {
    if inputs.t == 0 || inputs.k == 0 {
        return Err(EvalError::BadBoundInputs("t and k must be ≥ 1".into()));
    }
    if inputs.docs.is_empty() {
        return Err(EvalError::BadBoundInputs("no documents".into()));
    }
    if !(inputs.noise_variance >= 0.0) || !inputs.noise_variance.is_finite() {
        return Err(EvalError::BadBoundInputs(format!(
            "noise variance must be finite and ≥ 0, got {}",
            inputs.noise_variance
        )));
    }
    for (j, doc) in inputs.docs.iter().enumerate() {
        if doc.size == 0 || doc.omega == 0 {
            return Err(EvalError::BadBoundInputs(format!(
                "document {j} has zero size or repetition factor"
            )));
        }
        if doc.word_counts.is_empty() || doc.word_counts.iter().any(|&c| c == 0) {
            return Err(EvalError::BadBoundInputs(format!(
                "document {j} must track ≥ 1 word, all with positive counts"
            )));
        }
    }
    let d_max = inputs.docs.iter().map(|d| d.size).max().expect("non-empty");
    let kt = inputs.k * inputs.t;
    if kt > d_max {
        return Err(EvalError::KTooLarge { kt, d_max });
    }

    let v = inputs.noise_variance;
    let c_min = inputs
        .docs
        .iter()
        .flat_map(|doc| {
            let size = doc.size as f64;
            let omega = doc.omega as f64;
            doc.word_counts.iter().map(move |&w| {
                v * (size - w as f64 * omega) / (size * (size + v * omega))
            })
        })
        .fold(f64::INFINITY, f64::min);

    let t = inputs.t as f64;
    let k = inputs.k as f64;
    let d_max = d_max as f64;
    let prefactor = 2.0 / (1.0 - (t - 1.0) * k / d_max);
    let value = prefactor * (c_min / t - (1.0 - t * k / d_max) / t);
    Ok(BoundReport {
        c_min,
        value,
        vacuous: value <= 0.0,
    })
}
