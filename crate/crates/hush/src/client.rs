//! Transcription provider clients: the common contract, a deterministic mock
//! with a seeded word-substitution error model, and a reference HTTP client
//! that posts WAV bytes (true segments) or plain text (dummy segments) to a
//! configurable endpoint.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::segment::{Segment, SegmentId, SegmentKind};

/// Environment variable holding the bearer credential forwarded by
/// [`HttpClient`]. Treated as an opaque string.
pub const API_TOKEN_ENV: &str = "HUSH_API_TOKEN";

/// Errors surfaced by transcription clients.
#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("substitution probability must be in [0, 1], got {0}")]
    BadErrorRate(f64),
    #[error("no text available for segment {0}")]
    MissingText(SegmentId),
    #[error("cannot read audio for segment {id}: {source}")]
    MissingAudio {
        id: SegmentId,
        #[source]
        source: std::io::Error,
    },
    #[error("transport failure talking to {provider}: {detail}")]
    Transport { provider: String, detail: String },
    #[error("{provider} answered segment {id} with status {status}")]
    BadStatus {
        provider: String,
        id: SegmentId,
        status: u16,
    },
    #[error("{provider} sent an unreadable reply for segment {id}: {detail}")]
    BadReply {
        provider: String,
        id: SegmentId,
        detail: String,
    },
}

/// A transcription provider. One client instance serves one provider; the
/// orchestrator sends each provider its full shuffled list and expects one
/// text per segment, in order. Segments are independent: a client never needs
/// cross-segment context, so retrying a whole list is idempotent as long as
/// per-segment output depends only on the segment itself.
pub trait TranscriptionClient {
    /// Stable identity used in manifests and error messages.
    fn id(&self) -> &str;

    /// Transcribes `segments` in order, returning exactly one text each.
    fn transcribe(&self, segments: &[Segment]) -> Result<Vec<String>, ClientError>;
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Deterministic in-process provider: answers from an oracle of true texts
/// (dummy segments echo their own text) and corrupts words independently with
/// probability `p_sub`. The corruption stream is seeded per segment from the
/// client seed and the segment id, so retries and list order cannot change
/// any segment's output.
#[derive(Debug, Clone)]
pub struct MockClient {
    id: String,
    oracle: BTreeMap<SegmentId, String>,
    p_sub: f64,
    seed: u64,
}

impl MockClient {
    pub fn new(
        id: impl Into<String>,
        oracle: BTreeMap<SegmentId, String>,
        p_sub: f64,
        seed: u64,
    ) -> Result<Self, ClientError> {
        if !(0.0..=1.0).contains(&p_sub) || p_sub.is_nan() {
            return Err(ClientError::BadErrorRate(p_sub));
        }
        Ok(Self {
            id: id.into(),
            oracle,
            p_sub,
            seed,
        })
    }

    fn source_text(&self, segment: &Segment) -> Result<String, ClientError> {
        match segment.kind {
            SegmentKind::True => self
                .oracle
                .get(&segment.id)
                .cloned()
                .ok_or_else(|| ClientError::MissingText(segment.id.clone())),
            SegmentKind::Dummy => segment
                .text
                .clone()
                .ok_or_else(|| ClientError::MissingText(segment.id.clone())),
        }
    }

    fn corrupt(&self, id: &SegmentId, text: &str) -> String {
        if self.p_sub == 0.0 {
            return text.to_string();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(id.as_str().as_bytes()));
        let words: Vec<String> = text
            .split_whitespace()
            .map(|w| {
                if rng.gen_range(0.0..1.0) < self.p_sub {
                    format!("suberr{}", rng.gen_range(0..997u32))
                } else {
                    w.to_string()
                }
            })
            .collect();
        words.join(" ")
    }
}

impl TranscriptionClient for MockClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn transcribe(&self, segments: &[Segment]) -> Result<Vec<String>, ClientError> {
        segments
            .iter()
            .map(|s| Ok(self.corrupt(&s.id, &self.source_text(s)?)))
            .collect()
    }
}

#[derive(Deserialize)]
struct TextReply {
    text: String,
}

/// Reference HTTP adapter. True segments are posted as `audio/wav` bytes read
/// from `<audio_dir>/<segment id>.wav`; dummy segments as `text/plain`. The
/// endpoint must reply with JSON `{"text": …}`. A bearer credential, when
/// present, is forwarded untouched from [`API_TOKEN_ENV`] (or set explicitly
/// via [`HttpClient::with_token`]).
#[derive(Debug)]
pub struct HttpClient {
    id: String,
    endpoint: String,
    audio_dir: PathBuf,
    token: Option<String>,
    agent: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(id: impl Into<String>, endpoint: impl Into<String>, audio_dir: PathBuf) -> Self {
        Self {
            id: id.into(),
            endpoint: endpoint.into(),
            audio_dir,
            token: std::env::var(API_TOKEN_ENV).ok(),
            agent: reqwest::blocking::Client::new(),
        }
    }

    /// Overrides the credential (otherwise taken from the environment).
    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    fn post_one(&self, segment: &Segment) -> Result<String, ClientError> {
        let mut req = match segment.kind {
            SegmentKind::True => {
                let path = self.audio_dir.join(format!("{}.wav", segment.id));
                let bytes = std::fs::read(&path).map_err(|source| ClientError::MissingAudio {
                    id: segment.id.clone(),
                    source,
                })?;
                self.agent
                    .post(&self.endpoint)
                    .header(reqwest::header::CONTENT_TYPE, "audio/wav")
                    .body(bytes)
            }
            SegmentKind::Dummy => {
                let text = segment
                    .text
                    .clone()
                    .ok_or_else(|| ClientError::MissingText(segment.id.clone()))?;
                self.agent
                    .post(&self.endpoint)
                    .header(reqwest::header::CONTENT_TYPE, "text/plain")
                    .body(text)
            }
        };
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| ClientError::Transport {
            provider: self.id.clone(),
            detail: e.to_string(),
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ClientError::BadStatus {
                provider: self.id.clone(),
                id: segment.id.clone(),
                status: status.as_u16(),
            });
        }
        let reply: TextReply = resp.json().map_err(|e| ClientError::BadReply {
            provider: self.id.clone(),
            id: segment.id.clone(),
            detail: e.to_string(),
        })?;
        Ok(reply.text)
    }
}

impl TranscriptionClient for HttpClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn transcribe(&self, segments: &[Segment]) -> Result<Vec<String>, ClientError> {
        segments.iter().map(|s| self.post_one(s)).collect()
    }
}
