//! Hierarchical audio segmentation: a coarse pass over long silences, a fine
//! pass over unvoiced gaps, greedy merging up to a minimum duration, and
//! boundary padding. Produces time-ordered speech segments ready to slice.

use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, TimeSpan};
use crate::segment::Segment;

/// Voicing decision threshold on the normalized autocorrelation peak.
const VOICING_THRESHOLD: f64 = 0.45;
/// Pitch search band, in Hz. Human speech fundamentals live well inside it.
const PITCH_MIN_HZ: f64 = 60.0;
const PITCH_MAX_HZ: f64 = 400.0;
/// Slack for float comparisons on span arithmetic.
const SPAN_EPS: f64 = 1e-9;

/// Errors from segmentation.
#[derive(Debug, thiserror::Error)]
pub enum SegmentationError {
    #[error("bad segmentation config: {0}")]
    BadConfig(String),
    #[error("audio buffer is empty")]
    EmptyAudio,
}

/// Tuning knobs for the segmenter. Defaults fit 16 kHz speech.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Frames with RMS below this dBFS level count as silent.
    pub silence_db: f64,
    /// Minimum duration for a silence to split coarse segments, seconds.
    pub silence_min_s: f64,
    /// Unvoiced gaps shorter than this are bridged into the voiced run.
    pub unvoiced_min_s: f64,
    /// Non-speech context attached to each side of every output segment.
    pub boundary_pad_s: f64,
    /// Fine segments are merged left to right until at least this long.
    pub min_segment_s: f64,
    /// Analysis frame length, seconds.
    pub frame_s: f64,
    /// Analysis hop, seconds. Must not exceed the frame length.
    pub hop_s: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            silence_db: -35.0,
            silence_min_s: 0.5,
            unvoiced_min_s: 0.020,
            boundary_pad_s: 0.040,
            min_segment_s: 1.0,
            frame_s: 0.030,
            hop_s: 0.010,
        }
    }
}

impl SegmentationConfig {
    /// Checks the knobs are usable: positive durations (a zero minimum
    /// segment length is allowed and disables merging), a finite threshold,
    /// and a hop no longer than the frame.
    pub fn validate(&self) -> Result<(), SegmentationError> {
        let positive = [
            ("silence_min_s", self.silence_min_s),
            ("unvoiced_min_s", self.unvoiced_min_s),
            ("boundary_pad_s", self.boundary_pad_s),
            ("frame_s", self.frame_s),
            ("hop_s", self.hop_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SegmentationError::BadConfig(format!(
                    "{name} must be a positive duration, got {v}"
                )));
            }
        }
        if !(self.min_segment_s >= 0.0) || !self.min_segment_s.is_finite() {
            return Err(SegmentationError::BadConfig(format!(
                "min_segment_s must be non-negative, got {}",
                self.min_segment_s
            )));
        }
        if !self.silence_db.is_finite() {
            return Err(SegmentationError::BadConfig(format!(
                "silence_db must be finite, got {}",
                self.silence_db
            )));
        }
        if self.hop_s > self.frame_s + SPAN_EPS {
            return Err(SegmentationError::BadConfig(format!(
                "hop_s ({}) must not exceed frame_s ({})",
                self.hop_s, self.frame_s
            )));
        }
        Ok(())
    }

    fn frame_samples(&self, sample_rate: u32) -> Result<usize, SegmentationError> {
        let n = (self.frame_s * f64::from(sample_rate)).round() as usize;
        if n < 2 {
            return Err(SegmentationError::BadConfig(format!(
                "frame_s {} is under two samples at {} Hz",
                self.frame_s, sample_rate
            )));
        }
        Ok(n)
    }

    fn hop_samples(&self, sample_rate: u32) -> Result<usize, SegmentationError> {
        let n = (self.hop_s * f64::from(sample_rate)).round() as usize;
        if n == 0 {
            return Err(SegmentationError::BadConfig(format!(
                "hop_s {} is under one sample at {} Hz",
                self.hop_s, sample_rate
            )));
        }
        Ok(n)
    }
}

/// One analysis frame: a sample range within the buffer.
struct Frame {
    start: usize,
    end: usize,
}

fn frames(len: usize, frame_n: usize, hop_n: usize) -> Vec<Frame> {
    let mut out = Vec::new();
    let mut start = 0usize;
    while start < len {
        out.push(Frame {
            start,
            end: (start + frame_n).min(len),
        });
        start += hop_n;
    }
    out
}

fn rms_db(samples: &[f32]) -> f64 {
    let sum: f64 = samples.iter().map(|&s| f64::from(s) * f64::from(s)).sum();
    let rms = (sum / samples.len() as f64).sqrt();
    20.0 * rms.log10() // rms 0 → −inf, which is silent under any threshold
}

/// Finds long silences: maximal runs of frames whose RMS falls below
/// `silence_db`, kept when the run's time extent (first frame start to last
/// frame end) reaches `silence_min_s`. Spans are sorted and disjoint.
pub fn detect_silences(
    audio: &AudioBuffer,
    cfg: &SegmentationConfig,
) -> Result<Vec<TimeSpan>, SegmentationError> {
    cfg.validate()?;
    if audio.is_empty() {
        return Err(SegmentationError::EmptyAudio);
    }
    let sr = f64::from(audio.sample_rate());
    let frame_n = cfg.frame_samples(audio.sample_rate())?;
    let hop_n = cfg.hop_samples(audio.sample_rate())?;
    let frames = frames(audio.len(), frame_n, hop_n);
    let silent: Vec<bool> = frames
        .iter()
        .map(|f| rms_db(&audio.samples()[f.start..f.end]) < cfg.silence_db)
        .collect();

    let mut spans = Vec::new();
    let mut i = 0usize;
    while i < silent.len() {
        if !silent[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < silent.len() && silent[j + 1] {
            j += 1;
        }
        let start_s = frames[i].start as f64 / sr;
        let end_s = frames[j].end as f64 / sr;
        if end_s - start_s >= cfg.silence_min_s - SPAN_EPS {
            spans.push(TimeSpan::new(start_s, end_s));
        }
        i = j + 1;
    }
    Ok(spans)
}

/// Normalized autocorrelation peak over the pitch band, with the
/// short-overlap bias removed: r'(τ) = Σ x[i]·x[i+τ] · L / (r0 · (L−τ)).
/// Frames dominated by silence or noise stay below the voicing threshold.
/// Lags are capped at half the frame so the bias correction never rests on a
/// handful of sample pairs, and partial tail frames shorter than half the
/// nominal frame are too little evidence to call voiced.
fn frame_voiced(samples: &[f32], sample_rate: u32, nominal_frame: usize) -> bool {
    let len = samples.len();
    if len * 2 < nominal_frame {
        return false;
    }
    let lag_min = (f64::from(sample_rate) / PITCH_MAX_HZ).floor() as usize;
    let lag_max_pitch = (f64::from(sample_rate) / PITCH_MIN_HZ).ceil() as usize;
    if lag_min < 1 || len < lag_min + 2 {
        return false;
    }
    let lag_max = lag_max_pitch.min(len / 2);
    if lag_min > lag_max {
        return false;
    }

    let mean = samples.iter().map(|&s| f64::from(s)).sum::<f64>() / len as f64;
    let x: Vec<f64> = samples.iter().map(|&s| f64::from(s) - mean).collect();
    let r0: f64 = x.iter().map(|v| v * v).sum();
    if r0 < 1e-12 {
        return false;
    }

    let mut best = f64::NEG_INFINITY;
    for lag in lag_min..=lag_max {
        let mut num = 0.0f64;
        for i in 0..len - lag {
            num += x[i] * x[i + lag];
        }
        let r = num * len as f64 / (r0 * (len - lag) as f64);
        if r > best {
            best = r;
        }
    }
    best >= VOICING_THRESHOLD
}

/// Finds voiced regions: frames with a periodic autocorrelation peak, taken
/// with per-hop strip extents so sub-frame gaps survive, and with unvoiced
/// gaps shorter than `unvoiced_min_s` bridged. Spans are sorted and disjoint.
pub fn detect_voicing(
    audio: &AudioBuffer,
    cfg: &SegmentationConfig,
) -> Result<Vec<TimeSpan>, SegmentationError> {
    cfg.validate()?;
    if audio.is_empty() {
        return Err(SegmentationError::EmptyAudio);
    }
    let sr = f64::from(audio.sample_rate());
    let frame_n = cfg.frame_samples(audio.sample_rate())?;
    let hop_n = cfg.hop_samples(audio.sample_rate())?;
    let frames = frames(audio.len(), frame_n, hop_n);
    let mut voiced: Vec<bool> = frames
        .iter()
        .map(|f| frame_voiced(&audio.samples()[f.start..f.end], audio.sample_rate(), frame_n))
        .collect();

    // Bridge interior unvoiced runs shorter than the minimum gap.
    let hop_s = hop_n as f64 / sr;
    let mut i = 0usize;
    while i < voiced.len() {
        if voiced[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < voiced.len() && !voiced[j + 1] {
            j += 1;
        }
        let interior = i > 0 && j + 1 < voiced.len();
        if interior && (j - i + 1) as f64 * hop_s < cfg.unvoiced_min_s - SPAN_EPS {
            for flag in &mut voiced[i..=j] {
                *flag = true;
            }
        }
        i = j + 1;
    }

    // Each voiced frame claims its hop-width strip [i·hop, (i+1)·hop); frame
    // extents would smear a 30 ms window over sub-frame gaps.
    let duration = audio.duration_s();
    let mut spans = Vec::new();
    let mut i = 0usize;
    while i < voiced.len() {
        if !voiced[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < voiced.len() && voiced[j + 1] {
            j += 1;
        }
        let start_s = frames[i].start as f64 / sr;
        let end_s = ((j + 1) as f64 * hop_n as f64 / sr).min(duration);
        spans.push(TimeSpan::new(start_s, end_s));
        i = j + 1;
    }
    Ok(spans)
}

fn complement(spans: &[TimeSpan], duration: f64) -> Vec<TimeSpan> {
    let mut out = Vec::new();
    let mut cursor = 0.0f64;
    for s in spans {
        if s.start_s > cursor + SPAN_EPS {
            out.push(TimeSpan::new(cursor, s.start_s));
        }
        cursor = cursor.max(s.end_s);
    }
    if duration > cursor + SPAN_EPS {
        out.push(TimeSpan::new(cursor, duration));
    }
    out
}

/// Runs the full hierarchy: coarse segments between long silences, fine
/// voiced spans within them, greedy left-to-right merging until each piece
/// reaches `min_segment_s` (the tail of a coarse segment may stay shorter),
/// then boundary padding clipped to the file edges and to half the gap
/// between neighbors. Output segments are time-ordered, disjoint, and carry
/// ids `seg-0000`, `seg-0001`, … in order.
pub fn segment(
    audio: &AudioBuffer,
    cfg: &SegmentationConfig,
) -> Result<Vec<Segment>, SegmentationError> {
    let silences = detect_silences(audio, cfg)?;
    let voiced = detect_voicing(audio, cfg)?;
    let duration = audio.duration_s();
    let coarse = complement(&silences, duration);

    let mut bodies: Vec<TimeSpan> = Vec::new();
    for c in &coarse {
        let fines: Vec<TimeSpan> = voiced
            .iter()
            .filter_map(|v| v.intersect(c))
            .filter(|s| s.duration_s() > SPAN_EPS)
            .collect();
        let mut i = 0usize;
        while i < fines.len() {
            let start = fines[i].start_s;
            let mut end = fines[i].end_s;
            i += 1;
            while end - start < cfg.min_segment_s - SPAN_EPS && i < fines.len() {
                end = fines[i].end_s;
                i += 1;
            }
            bodies.push(TimeSpan::new(start, end));
        }
    }

    let mut out = Vec::with_capacity(bodies.len());
    for (k, body) in bodies.iter().enumerate() {
        let left_avail = if k == 0 {
            body.start_s
        } else {
            (body.start_s - bodies[k - 1].end_s) / 2.0
        };
        let right_avail = if k + 1 == bodies.len() {
            duration - body.end_s
        } else {
            (bodies[k + 1].start_s - body.end_s) / 2.0
        };
        let start = body.start_s - cfg.boundary_pad_s.min(left_avail).max(0.0);
        let end = body.end_s + cfg.boundary_pad_s.min(right_avail).max(0.0);
        out.push(Segment::speech(format!("seg-{k:04}"), TimeSpan::new(start, end)));
    }
    Ok(out)
}
