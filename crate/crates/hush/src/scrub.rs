//! Sensitive-word scrubbing: rule-based entity detection over the offline
//! transcript, phonetic keyword spotting over segments with a tunable
//! sensitivity score, and routing of flagged segments to a local
//! transcriber so their audio never reaches a cloud provider.
//!
//! Keyword spotting works in the text/phonetic domain over each segment's
//! offline transcription: a segment is flagged when any token (or token
//! window, for multi-word keywords) is phonetically similar to a keyword at
//! or above the sensitivity threshold. Entity rules are deliberately
//! high-recall — over-flagging costs utility, under-flagging costs privacy.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::segment::Segment;
use crate::text::tokenize_surface;

/// Errors from scrubbing operations.
#[derive(Debug, thiserror::Error)]
pub enum ScrubError {
    #[error("sensitivity score must lie in [0,1], got {0}")]
    BadScore(f64),
    #[error("ground truth covers {truth} segments but {segments} were given")]
    TruthLengthMismatch { truth: usize, segments: usize },
}

/// Where a keyword came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordSource {
    /// Extracted by the entity rules.
    Entity,
    /// Supplied by the user.
    UserDefined,
}

/// A set of lowercase keywords/phrases to scrub, each tagged with its
/// source. Construction lowercases and trims; empty entries are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordList {
    entries: BTreeMap<String, KeywordSource>,
}

impl KeywordList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one keyword or phrase; returns whether it was newly inserted.
    pub fn push(&mut self, text: &str, source: KeywordSource) -> bool {
        let norm = text.trim().to_lowercase();
        if norm.is_empty() {
            return false;
        }
        self.entries.insert(norm, source).is_none()
    }

    /// Parses a keyword file: one keyword per line, `#` starts a comment.
    pub fn from_lines(text: &str, source: KeywordSource) -> Self {
        let mut list = KeywordList::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            list.push(line, source);
        }
        list
    }

    /// Union of two lists; on collision the first list's source wins.
    pub fn merge(&self, other: &KeywordList) -> KeywordList {
        let mut entries = other.entries.clone();
        entries.extend(self.entries.clone());
        KeywordList { entries }
    }

    pub fn contains(&self, text: &str) -> bool {
        self.entries.contains_key(&text.trim().to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, KeywordSource)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Keyword texts, for handing to vocabulary estimation as banned words.
    pub fn texts(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

/// Threshold on phonetic similarity above which a token counts as a
/// keyword hit; 0 flags everything with a token, 1 only exact phonetic
/// matches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityScore(f64);

impl SensitivityScore {
    pub fn new(s: f64) -> Result<Self, ScrubError> {
        if !(0.0..=1.0).contains(&s) || s.is_nan() {
            return Err(ScrubError::BadScore(s));
        }
        Ok(SensitivityScore(s))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

// ---------------------------------------------------------------------------
// Entity detection
// ---------------------------------------------------------------------------

/// Rule-based entity extraction over a transcript: single capitalized
/// tokens not at a sentence start, runs of two or more consecutive
/// capitalized tokens (kept even sentence-initially — a single leading
/// capital is ordinary prose, a title-case run is a name), and numeric
/// tokens. Results are lowercased; multi-token runs become one phrase.
pub fn detect_entities(transcript: &str) -> KeywordList {
    let mut list = KeywordList::new();
    let tokens: Vec<&str> = transcript.split_whitespace().collect();

    let stripped = |tok: &str| -> String {
        tok.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
    };
    let is_capitalized = |tok: &str| -> bool {
        stripped(tok)
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() && c.is_uppercase())
    };
    let is_numeric = |tok: &str| -> bool {
        let s = stripped(tok);
        !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
    };

    let mut run: Vec<String> = Vec::new();
    let mut run_starts_sentence = false;
    let mut sentence_start = true;
    let flush = |run: &mut Vec<String>, starts_sentence: bool, list: &mut KeywordList| {
        match run.len() {
            0 => {}
            1 => {
                if !starts_sentence {
                    list.push(&run[0], KeywordSource::Entity);
                }
            }
            _ => {
                list.push(&run.join(" "), KeywordSource::Entity);
            }
        }
        run.clear();
    };

    for tok in tokens {
        if is_numeric(tok) {
            flush(&mut run, run_starts_sentence, &mut list);
            list.push(&stripped(tok), KeywordSource::Entity);
        } else if is_capitalized(tok) {
            if run.is_empty() {
                run_starts_sentence = sentence_start;
            }
            run.push(stripped(tok).to_lowercase());
        } else {
            flush(&mut run, run_starts_sentence, &mut list);
        }
        sentence_start = tok.ends_with(['.', '!', '?']);
    }
    flush(&mut run, run_starts_sentence, &mut list);
    list
}

// ---------------------------------------------------------------------------
// Phonetic encoding and similarity
// ---------------------------------------------------------------------------

/// Classic Metaphone phonetic encoding (uncapped length). Letters only;
/// non-alphabetic characters are dropped, so purely numeric input encodes
/// to the empty string.
pub fn metaphone(word: &str) -> String {
    // Uppercase letters only, then collapse adjacent duplicates except C.
    let raw: Vec<char> = word
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_uppercase())
        .collect();
    let mut w: Vec<char> = Vec::with_capacity(raw.len());
    for &c in &raw {
        if w.last() == Some(&c) && c != 'C' {
            continue;
        }
        w.push(c);
    }
    if w.is_empty() {
        return String::new();
    }

    // Initial-letter exceptions.
    match (w[0], w.get(1).copied()) {
        ('A', Some('E'))
        | ('G', Some('N'))
        | ('K', Some('N'))
        | ('P', Some('N'))
        | ('W', Some('R')) => {
            w.remove(0);
        }
        ('X', _) => w[0] = 'S',
        ('W', Some('H')) => {
            w.remove(1);
        }
        _ => {}
    }

    let is_vowel = |c: char| matches!(c, 'A' | 'E' | 'I' | 'O' | 'U');
    let n = w.len();
    let at = |i: usize| w.get(i).copied();
    let mut out = String::new();
    let mut i = 0usize;
    while i < n {
        let c = w[i];
        let next = at(i + 1);
        let next2 = at(i + 2);
        let prev = if i > 0 { at(i - 1) } else { None };
        let mut advance = 1usize;
        match c {
            'A' | 'E' | 'I' | 'O' | 'U' => {
                if i == 0 {
                    out.push(c);
                }
            }
            'B' => {
                // Silent terminal B after M ("lamb").
                if !(i + 1 == n && prev == Some('M')) {
                    out.push('B');
                }
            }
            'C' => {
                if prev == Some('S') && matches!(next, Some('I') | Some('E') | Some('Y')) {
                    // "science": the C adds nothing after S.
                } else if next == Some('I') && next2 == Some('A') {
                    out.push('X');
                } else if next == Some('H') {
                    out.push(if prev == Some('S') { 'K' } else { 'X' });
                    advance = 2;
                } else if matches!(next, Some('I') | Some('E') | Some('Y')) {
                    out.push('S');
                } else {
                    out.push('K');
                }
            }
            'D' => {
                if next == Some('G') && matches!(next2, Some('E') | Some('I') | Some('Y')) {
                    out.push('J');
                    advance = 2;
                } else {
                    out.push('T');
                }
            }
            'F' => out.push('F'),
            'G' => {
                if next == Some('H') {
                    if next2.map_or(true, |c| !is_vowel(c)) {
                        // "night", "caught": GH silent before a consonant
                        // or at word end.
                        advance = 2;
                    } else {
                        out.push('K');
                        advance = 2;
                    }
                } else if next == Some('N')
                    && (i + 2 == n || (next2 == Some('E') && at(i + 3) == Some('D') && i + 4 == n))
                {
                    // Terminal GN / GNED: "sign", "signed".
                } else if matches!(next, Some('I') | Some('E') | Some('Y')) {
                    out.push('J');
                } else {
                    out.push('K');
                }
            }
            'H' => {
                let silent =
                    prev.is_some_and(is_vowel) && next.map_or(true, |c| !is_vowel(c));
                if !silent {
                    out.push('H');
                }
            }
            'J' => out.push('J'),
            'K' => {
                if prev != Some('C') {
                    out.push('K');
                }
            }
            'L' => out.push('L'),
            'M' => out.push('M'),
            'N' => out.push('N'),
            'P' => {
                if next == Some('H') {
                    out.push('F');
                    advance = 2;
                } else {
                    out.push('P');
                }
            }
            'Q' => out.push('K'),
            'R' => out.push('R'),
            'S' => {
                if next == Some('H') {
                    out.push('X');
                    advance = 2;
                } else if next == Some('I') && matches!(next2, Some('O') | Some('A')) {
                    out.push('X');
                } else {
                    out.push('S');
                }
            }
            'T' => {
                if next == Some('H') {
                    out.push('0');
                    advance = 2;
                } else if next == Some('I') && matches!(next2, Some('O') | Some('A')) {
                    out.push('X');
                } else if next == Some('C') && next2 == Some('H') {
                    // TCH: the T is silent ("watch").
                } else {
                    out.push('T');
                }
            }
            'V' => out.push('F'),
            'W' => {
                if next.is_some_and(is_vowel) {
                    out.push('W');
                }
            }
            'X' => out.push_str("KS"),
            'Y' => {
                if next.is_some_and(is_vowel) {
                    out.push('Y');
                }
            }
            'Z' => out.push('S'),
            _ => {}
        }
        i += advance;
    }
    out
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = usize::from(a[i - 1] != b[j - 1]);
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + sub);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Phonetic similarity in [0,1]: 1 − normalized edit distance between the
/// Metaphone encodings; symmetric, and 1 exactly when the encodings are
/// equal. Inputs whose encodings are empty (e.g. pure numbers) fall back to
/// the same measure on the raw lowercase strings, so "5551234" still
/// matches itself.
pub fn phonetic_similarity(a: &str, b: &str) -> f64 {
    let ea = metaphone(a);
    let eb = metaphone(b);
    let (x, y) = if ea.is_empty() || eb.is_empty() {
        (a.trim().to_lowercase(), b.trim().to_lowercase())
    } else {
        (ea, eb)
    };
    let max_len = x.chars().count().max(y.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&x, &y) as f64 / max_len as f64
}

// ---------------------------------------------------------------------------
// Segment flagging
// ---------------------------------------------------------------------------

/// True when the segment's text phonetically hits any keyword at or above
/// the threshold. Multi-word keywords must match a window of consecutive
/// tokens, each constituent at or above the threshold.
fn segment_hits(text: &str, keywords: &KeywordList, s: f64) -> bool {
    let tokens = tokenize_surface(text);
    if tokens.is_empty() {
        return false;
    }
    keywords.iter().any(|(kw, _)| {
        let parts: Vec<&str> = kw.split_whitespace().collect();
        if parts.is_empty() || parts.len() > tokens.len() {
            return false;
        }
        tokens.windows(parts.len()).any(|win| {
            win.iter()
                .zip(&parts)
                .all(|(tok, part)| phonetic_similarity(tok, part) >= s)
        })
    })
}

/// Partitions segments into (flagged, clean) by phonetic keyword spotting
/// over each segment's candidate text. Segments without text (or with no
/// tokens) cannot hit and stay clean. Every input segment lands in exactly
/// one side, in input order.
pub fn flag_segments(
    segments: &[Segment],
    keywords: &KeywordList,
    score: SensitivityScore,
) -> (Vec<Segment>, Vec<Segment>) {
    let mut flagged = Vec::new();
    let mut clean = Vec::new();
    for seg in segments {
        let hit = seg
            .text
            .as_deref()
            .is_some_and(|t| segment_hits(t, keywords, score.value()));
        if hit {
            flagged.push(seg.clone());
        } else {
            clean.push(seg.clone());
        }
    }
    (flagged, clean)
}

/// Transcribes flagged segments locally so their audio never leaves the
/// machine. Tests use an identity oracle over known text.
pub trait LocalTranscriber {
    fn transcribe(&self, segment: &Segment) -> String;
}

/// Returns the segment's own candidate text — the identity oracle used
/// wherever ground truth is known.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranscriber;

impl LocalTranscriber for IdentityTranscriber {
    fn transcribe(&self, segment: &Segment) -> String {
        segment.text.clone().unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------
// ROC
// ---------------------------------------------------------------------------

/// One operating point of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub s: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Sweeps the sensitivity threshold over `grid` and reports (s, TPR, FPR)
/// against ground-truth flags. With no positives TPR reports 1, with no
/// negatives FPR reports 0 (the vacuous rates).
pub fn roc_curve(
    segments: &[Segment],
    truth: &[bool],
    keywords: &KeywordList,
    grid: &[f64],
) -> Result<Vec<RocPoint>, ScrubError> {
    if segments.len() != truth.len() {
        return Err(ScrubError::TruthLengthMismatch {
            truth: truth.len(),
            segments: segments.len(),
        });
    }
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    let mut points = Vec::with_capacity(grid.len());
    for &s in grid {
        let score = SensitivityScore::new(s)?;
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (seg, &is_sensitive) in segments.iter().zip(truth) {
            let hit = seg
                .text
                .as_deref()
                .is_some_and(|t| segment_hits(t, keywords, score.value()));
            if hit && is_sensitive {
                tp += 1;
            } else if hit {
                fp += 1;
            }
        }
        points.push(RocPoint {
            s,
            tpr: if positives == 0 {
                1.0
            } else {
                tp as f64 / positives as f64
            },
            fpr: if negatives == 0 {
                0.0
            } else {
                fp as f64 / negatives as f64
            },
        });
    }
    Ok(points)
}

/// Writes ROC points as CSV with an `s,TPR,FPR` header.
pub fn write_roc_csv<W: Write>(points: &[RocPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "s,TPR,FPR")?;
    for p in points {
        writeln!(out, "{},{},{}", p.s, p.tpr, p.fpr)?;
    }
    Ok(())
}
