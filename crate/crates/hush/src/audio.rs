//! In-memory audio and time-span primitives shared by the WAV loader and the
//! segmenter.

use serde::{Deserialize, Serialize};

/// Mono audio held as normalized `f32` samples in `[-1.0, 1.0)`.
///
/// 16-bit PCM input maps sample `s` to `s as f32 / 32768.0`; stereo input is
/// down-mixed by averaging the two channels before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Wraps raw normalized samples. `sample_rate` must be positive.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copies the samples covered by `span` (clamped to the buffer) into a
    /// new buffer with the same sample rate.
    pub fn slice(&self, span: TimeSpan) -> AudioBuffer {
        let sr = self.sample_rate as f64;
        let start = ((span.start_s * sr).round() as usize).min(self.samples.len());
        let end = ((span.end_s * sr).round() as usize).clamp(start, self.samples.len());
        AudioBuffer::new(self.samples[start..end].to_vec(), self.sample_rate)
    }
}

/// Half-open interval of time in seconds, `start_s <= end_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeSpan {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        assert!(
            start_s <= end_s,
            "span start {start_s} must not exceed end {end_s}"
        );
        Self { start_s, end_s }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Intersection with another span, or `None` when they do not overlap in
    /// a set of positive measure.
    pub fn intersect(&self, other: &TimeSpan) -> Option<TimeSpan> {
        let start = self.start_s.max(other.start_s);
        let end = self.end_s.min(other.end_s);
        if start < end {
            Some(TimeSpan::new(start, end))
        } else {
            None
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }
}
