//! Privacy-preserving speech transcription pipeline.
//!
//! `hush` lets a user outsource speech transcription to accurate but
//! untrusted cloud providers while hiding both the *content profile* and the
//! *structure* of the speech:
//!
//! 1. [`segmentation`] cuts a recording into short segments at silences and
//!    unvoiced gaps, so no provider sees contiguous speech.
//! 2. [`scrub`] flags segments that phonetically match sensitive keywords or
//!    detected entities; those are routed to a local transcriber instead.
//! 3. [`dp`] calibrates a truncated, discretized Laplace noise distribution
//!    so that the word histogram each provider can compute is a
//!    differentially private release: indistinguishable among all histograms
//!    within ℓ1 distance `d` of the truth.
//! 4. [`dummy`] realizes that noise as concrete dummy text segments (each
//!    carrying exactly one vocabulary word) drawn from a user-supplied
//!    corpus, and prices the overhead.
//! 5. [`orchestrator`] partitions the true segments across `N` non-colluding
//!    providers, shuffles dummies in, dispatches through a
//!    [`client::TranscriptionClient`], then strips dummies and de-shuffles to
//!    reconstruct the exact transcript.
//! 6. [`eval`] and [`attack`] measure utility (word error rate) and privacy
//!    (histogram/topic/stylometry distances, ordering and dummy-spotting
//!    attacks) of a run.
//!
//! All randomness flows through explicit seeds; every stage is deterministic
//! given its inputs.

pub mod attack;
pub mod audio;
pub mod client;
pub mod dp;
pub mod dummy;
pub mod eval;
pub mod orchestrator;
pub mod scrub;
pub mod segment;
pub mod segmentation;
pub mod text;
pub mod wav;
