//! End-to-end flow: partition true segments across providers, interleave the
//! planned dummy segments, shuffle each provider's send list with full
//! bookkeeping, dispatch to transcription clients with retries, then strip
//! dummies and de-shuffle into the final transcript.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::client::{ClientError, TranscriptionClient};
use crate::dp::NoisePlan;
use crate::segment::{Segment, SegmentId, SegmentKind};

/// Attempts per provider before dispatch gives up.
const RETRY_ATTEMPTS: u32 = 3;
/// Base backoff; doubles after each failed attempt.
const BACKOFF_BASE_MS: u64 = 25;
/// Decouples the shuffle randomness from the partition randomness when one
/// pipeline seed drives both.
const SHUFFLE_SEED_SALT: u64 = 0x517c_c1b7_2722_0a95;

/// Errors from partitioning, shuffling, dispatch, and reassembly.
#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("provider count must be at least 1, got {0}")]
    BadProviderCount(u32),
    #[error("{segments} segments but {assignments} assignment entries")]
    AssignmentMismatch { segments: usize, assignments: usize },
    #[error("assignment names provider {provider} but only {n_providers} exist")]
    ProviderOutOfRange { provider: u32, n_providers: u32 },
    #[error("expected one dummy list per provider ({expected}), got {got}")]
    DummyProviderMismatch { expected: usize, got: usize },
    #[error("segment id {0} appears more than once")]
    DuplicateSegmentId(SegmentId),
    #[error("segment {0} has the wrong kind for the list it was passed in")]
    WrongKind(SegmentId),
    #[error("{providers} provider lists but {clients} clients")]
    ClientCountMismatch { providers: usize, clients: usize },
    #[error("provider {provider} failed after {attempts} attempts: {detail}")]
    Transport {
        provider: u32,
        attempts: u32,
        detail: String,
    },
    #[error("provider {provider} answered {got} segments, expected {expected}")]
    ResponseCountMismatch {
        provider: u32,
        expected: usize,
        got: usize,
    },
    #[error("responses cover {got} providers, manifest lists {expected}")]
    ResponseProviderMismatch { expected: usize, got: usize },
    #[error("manifest is internally inconsistent: {0}")]
    ManifestCorrupt(String),
}

/// Which voice-conversion flavor the user selected for the upstream audio
/// stage. Recorded in the manifest for provenance; the conversion itself is
/// outside this pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcMode {
    Cloning,
    OneToOne,
    ManyToOne,
}

/// Privacy-budget snapshot stored alongside the shuffle bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpSnapshot {
    pub epsilon_eff: f64,
    pub delta_eff: f64,
    pub distance: u32,
}

impl DpSnapshot {
    pub fn from_plan(plan: &NoisePlan) -> Self {
        Self {
            epsilon_eff: plan.eps_eff,
            delta_eff: plan.delta_eff,
            distance: plan.distance,
        }
    }
}

/// A true segment's slot in a provider's shuffled send list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruePosition {
    /// Index in the provider's send list.
    pub send_pos: usize,
    /// Index in the original global segment order.
    pub original_index: usize,
}

/// A dummy segment's slot in a provider's shuffled send list. The send
/// position doubles as the dummy's injection timestamp: our dummies are text
/// tagged, so list position is the only time axis they have.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DummyPosition {
    pub send_pos: usize,
    pub id: SegmentId,
}

/// Everything one provider was sent, and where each piece came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderManifest {
    pub provider: u32,
    /// Segment ids in the exact order sent.
    pub send_ids: Vec<SegmentId>,
    /// Inverse of the shuffle for true segments.
    pub true_positions: Vec<TruePosition>,
    /// Where the dummies sit, so their transcripts can be stripped.
    pub dummy_positions: Vec<DummyPosition>,
}

/// Complete bookkeeping for one pipeline run: enough to invert the shuffle
/// exactly and to audit which budget produced the noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub seed: u64,
    pub n_providers: u32,
    pub dp: DpSnapshot,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vc_mode: Option<VcMode>,
    pub providers: Vec<ProviderManifest>,
}

/// Assigns each of `n_segments` (by original index) to a provider, i.i.d.
/// uniform over `0..n_providers`. Deterministic given the seed.
pub fn partition(
    n_segments: usize,
    n_providers: u32,
    seed: u64,
) -> Result<Vec<u32>, OrchestratorError> {
    if n_providers == 0 {
        return Err(OrchestratorError::BadProviderCount(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_segments)
        .map(|_| rng.gen_range(0..n_providers))
        .collect())
}

/// Builds each provider's shuffled send list (true segments of its partition
/// interleaved uniformly with its dummy segments) plus the manifest that
/// inverts everything. Send-list segments carry their provider and shuffle
/// position; ids must be globally unique across true and dummy segments.
pub fn shuffle_and_manifest(
    true_segments: &[Segment],
    assignment: &[u32],
    dummies: &[Vec<Segment>],
    n_providers: u32,
    seed: u64,
    dp: DpSnapshot,
    vc_mode: Option<VcMode>,
) -> Result<(Vec<Vec<Segment>>, PartitionManifest), OrchestratorError> {
    if n_providers == 0 {
        return Err(OrchestratorError::BadProviderCount(0));
    }
    if assignment.len() != true_segments.len() {
        return Err(OrchestratorError::AssignmentMismatch {
            segments: true_segments.len(),
            assignments: assignment.len(),
        });
    }
    if dummies.len() != n_providers as usize {
        return Err(OrchestratorError::DummyProviderMismatch {
            expected: n_providers as usize,
            got: dummies.len(),
        });
    }
    if let Some(&p) = assignment.iter().find(|&&p| p >= n_providers) {
        return Err(OrchestratorError::ProviderOutOfRange {
            provider: p,
            n_providers,
        });
    }
    let mut seen = BTreeSet::new();
    for s in true_segments.iter().chain(dummies.iter().flatten()) {
        if !seen.insert(s.id.clone()) {
            return Err(OrchestratorError::DuplicateSegmentId(s.id.clone()));
        }
    }
    for s in true_segments {
        if s.kind != SegmentKind::True {
            return Err(OrchestratorError::WrongKind(s.id.clone()));
        }
    }
    for s in dummies.iter().flatten() {
        if s.kind != SegmentKind::Dummy {
            return Err(OrchestratorError::WrongKind(s.id.clone()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut send_lists = Vec::with_capacity(n_providers as usize);
    let mut rows = Vec::with_capacity(n_providers as usize);
    for p in 0..n_providers {
        // (original global index | None for dummy, segment)
        let mut items: Vec<(Option<usize>, &Segment)> = true_segments
            .iter()
            .enumerate()
            .filter(|(i, _)| assignment[*i] == p)
            .map(|(i, s)| (Some(i), s))
            .collect();
        items.extend(dummies[p as usize].iter().map(|s| (None, s)));
        items.shuffle(&mut rng);

        let mut send_list = Vec::with_capacity(items.len());
        let mut send_ids = Vec::with_capacity(items.len());
        let mut true_positions = Vec::new();
        let mut dummy_positions = Vec::new();
        for (send_pos, (origin, seg)) in items.into_iter().enumerate() {
            let mut sent = seg.clone();
            sent.partition = Some(p);
            sent.shuffle_pos = Some(send_pos);
            send_ids.push(sent.id.clone());
            match origin {
                Some(original_index) => true_positions.push(TruePosition {
                    send_pos,
                    original_index,
                }),
                None => dummy_positions.push(DummyPosition {
                    send_pos,
                    id: sent.id.clone(),
                }),
            }
            send_list.push(sent);
        }
        send_lists.push(send_list);
        rows.push(ProviderManifest {
            provider: p,
            send_ids,
            true_positions,
            dummy_positions,
        });
    }

    Ok((
        send_lists,
        PartitionManifest {
            seed,
            n_providers,
            dp,
            vc_mode,
            providers: rows,
        },
    ))
}

/// Sends each provider its list and collects one text per segment, keyed by
/// (provider, send position). A failed or short reply is retried up to
/// [`RETRY_ATTEMPTS`] times with exponential backoff; segment independence
/// and stable ids make the retry idempotent. Providers are processed
/// sequentially but independently — no response feeds another request.
pub fn dispatch(
    send_lists: &[Vec<Segment>],
    clients: &[&dyn TranscriptionClient],
) -> Result<Vec<Vec<String>>, OrchestratorError> {
    if send_lists.len() != clients.len() {
        return Err(OrchestratorError::ClientCountMismatch {
            providers: send_lists.len(),
            clients: clients.len(),
        });
    }
    let mut responses = Vec::with_capacity(send_lists.len());
    for (p, (list, client)) in send_lists.iter().zip(clients).enumerate() {
        let mut last_detail = String::new();
        let mut done = None;
        for attempt in 0..RETRY_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(
                    BACKOFF_BASE_MS << (attempt - 1),
                ));
            }
            match client.transcribe(list) {
                Ok(texts) if texts.len() == list.len() => {
                    done = Some(texts);
                    break;
                }
                Ok(texts) => {
                    last_detail = format!(
                        "short response from {}: {} texts for {} segments (first missing position {})",
                        client.id(),
                        texts.len(),
                        list.len(),
                        texts.len().min(list.len())
                    );
                }
                Err(e @ ClientError::BadErrorRate(_))
                | Err(e @ ClientError::MissingText(_))
                | Err(e @ ClientError::MissingAudio { .. }) => {
                    // Local input problems cannot be fixed by retrying.
                    return Err(OrchestratorError::Transport {
                        provider: p as u32,
                        attempts: attempt + 1,
                        detail: e.to_string(),
                    });
                }
                Err(e) => last_detail = e.to_string(),
            }
        }
        match done {
            Some(texts) => responses.push(texts),
            None => {
                return Err(OrchestratorError::Transport {
                    provider: p as u32,
                    attempts: RETRY_ATTEMPTS,
                    detail: last_detail,
                })
            }
        }
    }
    Ok(responses)
}

/// Drops dummy transcripts, undoes each provider's shuffle, merges true
/// segments back into the original global order, and joins their texts with
/// single spaces.
pub fn reassemble(
    responses: &[Vec<String>],
    manifest: &PartitionManifest,
) -> Result<String, OrchestratorError> {
    if responses.len() != manifest.providers.len() {
        return Err(OrchestratorError::ResponseProviderMismatch {
            expected: manifest.providers.len(),
            got: responses.len(),
        });
    }
    let mut pieces: Vec<(usize, &str)> = Vec::new();
    for (row, texts) in manifest.providers.iter().zip(responses) {
        if texts.len() != row.send_ids.len() {
            return Err(OrchestratorError::ResponseCountMismatch {
                provider: row.provider,
                expected: row.send_ids.len(),
                got: texts.len(),
            });
        }
        for tp in &row.true_positions {
            if tp.send_pos >= texts.len() {
                return Err(OrchestratorError::ManifestCorrupt(format!(
                    "provider {} true position {} outside its {}-long send list",
                    row.provider,
                    tp.send_pos,
                    texts.len()
                )));
            }
            pieces.push((tp.original_index, texts[tp.send_pos].as_str()));
        }
    }
    pieces.sort_by_key(|(i, _)| *i);
    for (k, (i, _)) in pieces.iter().enumerate() {
        if *i != k {
            return Err(OrchestratorError::ManifestCorrupt(format!(
                "true segment original indices are not the contiguous range 0..{} (saw {} at rank {})",
                pieces.len(),
                i,
                k
            )));
        }
    }
    Ok(pieces
        .iter()
        .map(|(_, t)| *t)
        .collect::<Vec<_>>()
        .join(" "))
}

/// Output of a full pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub manifest: PartitionManifest,
    pub send_lists: Vec<Vec<Segment>>,
    pub responses: Vec<Vec<String>>,
    pub transcript: String,
}

/// Convenience wrapper chaining partition → shuffle → dispatch → reassemble.
/// `seed` drives the partition; the shuffle uses a salted derivation of it so
/// the two random choices stay decoupled.
pub fn run_pipeline(
    true_segments: &[Segment],
    dummies: &[Vec<Segment>],
    clients: &[&dyn TranscriptionClient],
    plan: &NoisePlan,
    seed: u64,
    vc_mode: Option<VcMode>,
) -> Result<PipelineRun, OrchestratorError> {
    let n = plan.num_providers() as u32;
    let assignment = partition(true_segments.len(), n, seed)?;
    let (send_lists, mut manifest) = shuffle_and_manifest(
        true_segments,
        &assignment,
        dummies,
        n,
        seed ^ SHUFFLE_SEED_SALT,
        DpSnapshot::from_plan(plan),
        vc_mode,
    )?;
    // The manifest identifies the run by the caller's seed; the salted
    // shuffle seed is an internal derivation of it.
    manifest.seed = seed;
    let responses = dispatch(&send_lists, clients)?;
    let transcript = reassemble(&responses, &manifest)?;
    Ok(PipelineRun {
        manifest,
        send_lists,
        responses,
        transcript,
    })
}
