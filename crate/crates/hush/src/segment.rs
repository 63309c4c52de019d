//! Segment domain types shared across the pipeline.
//!
//! A [`Segment`] is the unit that travels through scrubbing, partitioning,
//! shuffling, and dispatch. True segments come from the audio segmenter and
//! carry a [`TimeSpan`]; dummy segments come from the dummy planner and carry
//! text plus the single vocabulary word they contribute to the provider's
//! histogram view.

use crate::audio::TimeSpan;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Opaque, unique segment identifier (unique within one pipeline run).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub String);

impl SegmentId {
    pub fn new(id: impl Into<String>) -> Self {
        SegmentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Whether a segment is real speech or injected noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Real speech cut from the input recording.
    True,
    /// Planted text segment that exists only to pad the histogram.
    Dummy,
}

/// One unit of work for a transcription provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: SegmentId,
    pub kind: SegmentKind,
    /// Position in the source recording; `None` for dummy segments.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<TimeSpan>,
    /// Candidate text: the dummy's content, or a true segment's transcript
    /// once known (used by scrubbing and by the mock provider).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<String>,
    /// For dummy segments, the one vocabulary word this segment contributes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vocab_word: Option<String>,
    /// Provider index this segment was assigned to, once partitioned.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partition: Option<u32>,
    /// Position in the provider's shuffled send list, once shuffled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shuffle_pos: Option<usize>,
}

impl Segment {
    /// A true segment covering `span`.
    pub fn speech(id: impl Into<String>, span: TimeSpan) -> Self {
        Segment {
            id: SegmentId::new(id),
            kind: SegmentKind::True,
            span: Some(span),
            text: None,
            vocab_word: None,
            partition: None,
            shuffle_pos: None,
        }
    }

    /// A dummy segment carrying `text` whose single vocabulary word is
    /// `vocab_word`.
    pub fn dummy(id: impl Into<String>, text: impl Into<String>, vocab_word: impl Into<String>) -> Self {
        Segment {
            id: SegmentId::new(id),
            kind: SegmentKind::Dummy,
            span: None,
            text: Some(text.into()),
            vocab_word: Some(vocab_word.into()),
            partition: None,
            shuffle_pos: None,
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.kind == SegmentKind::Dummy
    }
}
