//! Minimal WAV codec: 16-bit PCM RIFF reading (mono or stereo) and mono
//! writing. No external format crate — the pipeline needs exactly this one
//! encoding, and owning the parser keeps error taxonomy precise.

use std::fs;
use std::io;
use std::path::Path;

use crate::audio::AudioBuffer;

/// Errors from WAV parsing and writing.
#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    /// Structurally broken file: bad magic, truncated chunks, missing data.
    #[error("malformed wav: {0}")]
    Format(String),
    /// Well-formed but not an encoding this pipeline handles.
    #[error("unsupported wav: {0}")]
    Unsupported(String),
}

fn u16le(b: &[u8], at: usize) -> Result<u16, WavError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| WavError::Format(format!("truncated at byte {at}")))
}

fn u32le(b: &[u8], at: usize) -> Result<u32, WavError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| WavError::Format(format!("truncated at byte {at}")))
}

/// Loads a 16-bit PCM WAV file. Stereo is down-mixed by averaging the
/// channels; samples are normalized to [-1, 1] as `value / 32768`.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, WavError> {
    decode_wav(&fs::read(path)?)
}

/// Decodes a 16-bit PCM WAV byte stream; see [`load_wav`].
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, WavError> {
    if bytes.len() < 12 {
        return Err(WavError::Format("shorter than a RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(WavError::Format("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::Format("missing WAVE form type".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // tag, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32le(bytes, at + 4)? as usize;
        let body_at = at + 8;
        if body_at + size > bytes.len() {
            return Err(WavError::Format(format!(
                "chunk {:?} of {size} bytes overruns the file",
                String::from_utf8_lossy(id)
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::Format("fmt chunk shorter than 16 bytes".into()));
                }
                fmt = Some((
                    u16le(bytes, body_at)?,
                    u16le(bytes, body_at + 2)?,
                    u32le(bytes, body_at + 4)?,
                    u16le(bytes, body_at + 14)?,
                ));
            }
            b"data" => data = Some(&bytes[body_at..body_at + size]),
            _ => {} // skip unknown chunks (LIST, fact, …)
        }
        // Chunk bodies are word-aligned: odd sizes carry a pad byte.
        at = body_at + size + (size % 2);
    }

    let (tag, channels, rate, bits) = fmt.ok_or_else(|| WavError::Format("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| WavError::Format("no data chunk".into()))?;
    if tag != 1 {
        return Err(WavError::Unsupported(format!(
            "only PCM (format tag 1) is handled, got tag {tag}"
        )));
    }
    if bits != 16 {
        return Err(WavError::Unsupported(format!(
            "only 16-bit samples are handled, got {bits}"
        )));
    }
    if !(channels == 1 || channels == 2) {
        return Err(WavError::Unsupported(format!(
            "only mono or stereo is handled, got {channels} channels"
        )));
    }
    if rate < 8000 {
        return Err(WavError::Unsupported(format!(
            "sample rate must be at least 8000 Hz, got {rate}"
        )));
    }
    let bytes_per_frame = 2 * channels as usize;
    if data.len() % bytes_per_frame != 0 {
        return Err(WavError::Format(format!(
            "data chunk of {} bytes is not whole {channels}-channel frames",
            data.len()
        )));
    }

    let frames = data.len() / bytes_per_frame;
    let mut samples = Vec::with_capacity(frames);
    for f in 0..frames {
        let mut acc = 0.0f32;
        for c in 0..channels as usize {
            let at = f * bytes_per_frame + 2 * c;
            let v = i16::from_le_bytes([data[at], data[at + 1]]);
            acc += v as f32 / 32768.0;
        }
        samples.push(acc / channels as f32);
    }
    Ok(AudioBuffer::new(samples, rate))
}

/// Encodes a buffer as mono 16-bit PCM WAV bytes. Samples are clamped to
/// [-1, 1]; amplitudes that came from [`decode_wav`] round-trip exactly.
pub fn encode_wav(audio: &AudioBuffer) -> Vec<u8> {
    let data_len = audio.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate().to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate() * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in audio.samples() {
        let v = (f64::from(s).clamp(-1.0, 1.0) * 32768.0)
            .round()
            .clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Writes a buffer to disk as mono 16-bit PCM WAV.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<(), WavError> {
    fs::write(path, encode_wav(audio))?;
    Ok(())
}
