//! Shared helpers for the integration suites: deterministic audio synthesis
//! and a template sentence generator for corpus-scale experiments.

#![allow(dead_code)] // each test binary uses its own subset

use hush::audio::AudioBuffer;
use rand::Rng;

/// Builds test signals burst by burst. Tones are bright sawtooths — strongly
/// periodic, so the voicing detector locks onto them like it would onto
/// voiced speech.
pub struct SignalBuilder {
    sample_rate: u32,
    samples: Vec<f32>,
}

impl SignalBuilder {
    pub fn new(sample_rate: u32) -> Self {
        SignalBuilder {
            sample_rate,
            samples: Vec::new(),
        }
    }

    pub fn silence(mut self, dur_s: f64) -> Self {
        let n = (dur_s * f64::from(self.sample_rate)).round() as usize;
        self.samples.extend(std::iter::repeat(0.0).take(n));
        self
    }

    pub fn tone(mut self, dur_s: f64, f0: f64) -> Self {
        let sr = f64::from(self.sample_rate);
        let n = (dur_s * sr).round() as usize;
        for i in 0..n {
            let phase = (f0 * i as f64 / sr).fract();
            self.samples.push((0.5 * (2.0 * phase - 1.0)) as f32);
        }
        self
    }

    /// Current end time of the signal, in seconds.
    pub fn elapsed_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn build(self) -> AudioBuffer {
        AudioBuffer::new(self.samples, self.sample_rate)
    }
}

// Template pools for synthetic speech corpora. Sentences drawn from them are
// independent of each other (no cross-sentence structure), so a corpus of
// them carries no recoverable ordering signal — segment order is genuinely
// exchangeable, which is what the shuffle-attack experiments need.
pub const SUBJECTS: &[&str] = &[
    "the curator",
    "a violinist",
    "the engineer",
    "my neighbour",
    "the apprentice",
    "a cartographer",
    "the lighthouse keeper",
    "an archivist",
    "the gardener",
    "a locksmith",
    "the navigator",
    "an illustrator",
    "the brewer",
    "a stonemason",
    "the falconer",
    "an auctioneer",
];

pub const VERBS: &[&str] = &[
    "described",
    "repaired",
    "catalogued",
    "misplaced",
    "polished",
    "inspected",
    "sketched",
    "measured",
    "borrowed",
    "assembled",
    "unpacked",
    "photographed",
    "auctioned",
    "restored",
    "labelled",
    "wrapped",
];

pub const OBJECTS: &[&str] = &[
    "a copper kettle",
    "the oak cabinet",
    "a brass compass",
    "the velvet chair",
    "a porcelain vase",
    "the walnut desk",
    "a silver locket",
    "the marble bust",
    "a woven basket",
    "the glass lantern",
    "a leather satchel",
    "the iron gate",
    "a ceramic bowl",
    "the linen banner",
    "a wooden flute",
    "the pewter tray",
];

pub const PLACES: &[&str] = &[
    "before the auction",
    "near the harbour",
    "during the festival",
    "behind the chapel",
    "after the storm",
    "beside the fountain",
    "at the market",
    "along the canal",
    "under the archway",
    "inside the atrium",
    "by the window",
    "on the terrace",
    "past the orchard",
    "within the cloister",
    "outside the forge",
    "across the courtyard",
];

/// One template sentence. When `insert` is given, that word is woven into
/// the middle of the sentence (the slot a histogram-tracked vocabulary word
/// occupies); the pools themselves never contain it.
pub fn sentence<R: Rng>(rng: &mut R, insert: Option<&str>) -> String {
    let subject = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
    let verb = VERBS[rng.gen_range(0..VERBS.len())];
    let object = OBJECTS[rng.gen_range(0..OBJECTS.len())];
    let place = PLACES[rng.gen_range(0..PLACES.len())];
    match insert {
        Some(word) => format!("{subject} {verb} the {word} and {object} {place}"),
        None => format!("{subject} {verb} {object} {place}"),
    }
}
