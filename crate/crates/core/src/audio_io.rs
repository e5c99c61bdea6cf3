//! WAV decoding and silence-based utterance segmentation.
//!
//! Integer PCM is scaled by `2^(bits-1)` so that the most negative code maps
//! to exactly `-1.0`. Multi-channel frames are averaged to mono.

use std::fs::File;
use std::io::{self, BufReader, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("unsupported WAV encoding in {path}: format tag 0x{format_tag:04x}, {bits} bits")]
    UnsupportedFormat {
        path: String,
        format_tag: u16,
        bits: u16,
    },
    #[error("malformed WAV {path}: {reason}")]
    Decode { path: String, reason: String },
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("invalid segmentation parameters: {0}")]
    InvalidParams(String),
}

/// Mono sample buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip<T> {
    samples: Vec<T>,
    sample_rate: u32,
    source: String,
}

impl<T: Real> AudioClip<T> {
    /// Builds a clip, rejecting non-finite or out-of-range samples.
    pub fn new(
        samples: Vec<T>,
        sample_rate: u32,
        source: impl Into<String>,
    ) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !s.is_finite() || s.abs() > T::one())
        {
            return Err(AudioError::InvalidClip(format!(
                "sample {i} is {} (must be finite and within [-1, 1])",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            source: source.into(),
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copies out the samples covered by `seg` as a new clip.
    pub fn slice(&self, seg: SegmentSpec) -> Result<Self, AudioError> {
        if seg.start_sample >= seg.end_sample || seg.end_sample > self.samples.len() {
            return Err(AudioError::InvalidClip(format!(
                "segment {}..{} outside clip of {} samples",
                seg.start_sample,
                seg.end_sample,
                self.samples.len()
            )));
        }
        Ok(Self {
            samples: self.samples[seg.start_sample..seg.end_sample].to_vec(),
            sample_rate: self.sample_rate,
            source: self.source.clone(),
        })
    }
}

/// Half-open sample range `[start_sample, end_sample)` within one clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentSpec {
    pub start_sample: usize,
    pub end_sample: usize,
}

impl SegmentSpec {
    pub fn len(&self) -> usize {
        self.end_sample - self.start_sample
    }

    pub fn is_empty(&self) -> bool {
        self.end_sample <= self.start_sample
    }
}

fn io_err(path: &Path, source: io::Error) -> AudioError {
    AudioError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads `(format_tag, bits_per_sample)` from the `fmt ` chunk, resolving
/// WAVE_FORMAT_EXTENSIBLE to its sub-format tag.
fn probe_format_tag(path: &Path) -> Option<(u16, u16)> {
    let mut f = BufReader::new(File::open(path).ok()?);
    let mut riff = [0u8; 12];
    f.read_exact(&mut riff).ok()?;
    if &riff[0..4] != b"RIFF" || &riff[8..12] != b"WAVE" {
        return None;
    }
    loop {
        let mut hdr = [0u8; 8];
        f.read_exact(&mut hdr).ok()?;
        let size = u32::from_le_bytes([hdr[4], hdr[5], hdr[6], hdr[7]]);
        if &hdr[0..4] == b"fmt " {
            let mut body = vec![0u8; size as usize];
            f.read_exact(&mut body).ok()?;
            if body.len() < 16 {
                return None;
            }
            let mut tag = u16::from_le_bytes([body[0], body[1]]);
            let bits = u16::from_le_bytes([body[14], body[15]]);
            if tag == 0xFFFE && body.len() >= 26 {
                tag = u16::from_le_bytes([body[24], body[25]]);
            }
            return Some((tag, bits));
        }
        let skip = size as i64 + (size & 1) as i64;
        f.seek(SeekFrom::Current(skip)).ok()?;
    }
}

fn map_hound(path: &Path, err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) => io_err(path, e),
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat => {
            let (format_tag, bits) = probe_format_tag(path).unwrap_or((0, 0));
            AudioError::UnsupportedFormat {
                path: path.display().to_string(),
                format_tag,
                bits,
            }
        }
        other => AudioError::Decode {
            path: path.display().to_string(),
            reason: other.to_string(),
        },
    }
}

/// Decodes a RIFF/WAVE file into a mono clip.
pub fn load_wav<T: Real>(path: impl AsRef<Path>) -> Result<AudioClip<T>, AudioError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (_, bits) => {
            let (format_tag, _) = probe_format_tag(path).unwrap_or((0, bits));
            return Err(AudioError::UnsupportedFormat {
                path: path.display().to_string(),
                format_tag,
                bits,
            });
        }
    };

    if interleaved.len() % channels != 0 {
        return Err(io_err(
            path,
            io::Error::new(io::ErrorKind::UnexpectedEof, "partial multi-channel frame"),
        ));
    }
    let mut mono = Vec::with_capacity(interleaved.len() / channels);
    for frame in interleaved.chunks_exact(channels) {
        let m = frame.iter().sum::<f64>() / channels as f64;
        if !m.is_finite() {
            return Err(AudioError::Decode {
                path: path.display().to_string(),
                reason: "non-finite float sample".into(),
            });
        }
        mono.push(T::of(m.clamp(-1.0, 1.0)));
    }
    AudioClip::new(mono, spec.sample_rate, path.display().to_string())
}

/// Writes a clip as 16-bit mono PCM.
pub fn write_wav_i16<T: Real>(clip: &AudioClip<T>, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in &clip.samples {
        let code = (s.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(code).map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))
}

/// Frame-RMS silence detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilenceParams {
    pub rms_threshold: f64,
    pub min_silence_s: f64,
    pub min_segment_s: f64,
    pub frame_s: f64,
    pub hop_s: f64,
}

impl Default for SilenceParams {
    fn default() -> Self {
        Self {
            rms_threshold: 0.01,
            min_silence_s: 0.5,
            min_segment_s: 0.5,
            frame_s: 0.025,
            hop_s: 0.010,
        }
    }
}

impl SilenceParams {
    pub fn validate(&self) -> Result<(), AudioError> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(AudioError::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.rms_threshold, "rms_threshold")?;
        positive(self.min_silence_s, "min_silence_s")?;
        positive(self.frame_s, "frame_s")?;
        positive(self.hop_s, "hop_s")?;
        if !(self.min_segment_s >= 0.0) {
            return Err(AudioError::InvalidParams("min_segment_s must be non-negative".into()));
        }
        Ok(())
    }
}

/// Splits a clip at silent gaps lasting at least `min_silence_s`.
///
/// Frames whose RMS is below the threshold are silent; a maximal run of silent
/// frames spanning `min_silence_s` or more is a gap. The returned segments are
/// the stretches between gaps that contain at least one non-silent frame and
/// last `min_segment_s` or longer.
pub fn segment_by_silence<T: Real>(
    clip: &AudioClip<T>,
    params: &SilenceParams,
) -> Result<Vec<SegmentSpec>, AudioError> {
    params.validate()?;
    let x = clip.samples();
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let sr = clip.sample_rate() as f64;
    let frame_len = ((params.frame_s * sr).round() as usize).max(1);
    let hop = ((params.hop_s * sr).round() as usize).max(1);
    let threshold = T::of(params.rms_threshold);

    let starts: Vec<usize> = if x.len() <= frame_len {
        vec![0]
    } else {
        (0..=(x.len() - frame_len) / hop).map(|i| i * hop).collect()
    };
    let silent: Vec<bool> = starts
        .iter()
        .map(|&s| {
            let w = &x[s..(s + frame_len).min(x.len())];
            let energy = w.iter().map(|&v| v * v).sum::<T>() / T::of_usize(w.len());
            energy.sqrt() < threshold
        })
        .collect();

    // Qualifying silent gaps as sample ranges, merged when they overlap.
    let mut gaps: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < silent.len() {
        if !silent[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < silent.len() && silent[j + 1] {
            j += 1;
        }
        let gap_start = starts[i];
        let mut gap_end = (starts[j] + frame_len).min(x.len());
        if j + 1 == silent.len() {
            // trailing partial samples after the last full frame belong to the run
            gap_end = x.len();
        }
        if (gap_end - gap_start) as f64 / sr >= params.min_silence_s {
            match gaps.last_mut() {
                Some(last) if gap_start <= last.1 => last.1 = last.1.max(gap_end),
                _ => gaps.push((gap_start, gap_end)),
            }
        }
        i = j + 1;
    }

    let mut candidates = Vec::new();
    let mut cursor = 0usize;
    for &(gs, ge) in &gaps {
        if gs > cursor {
            candidates.push((cursor, gs));
        }
        cursor = cursor.max(ge);
    }
    if cursor < x.len() {
        candidates.push((cursor, x.len()));
    }

    let min_len = params.min_segment_s * sr;
    let out = candidates
        .into_iter()
        .filter(|&(s, e)| (e - s) as f64 >= min_len)
        .filter(|&(s, e)| {
            starts
                .iter()
                .zip(&silent)
                .any(|(&fs, &quiet)| !quiet && fs >= s && fs < e)
        })
        .map(|(s, e)| SegmentSpec {
            start_sample: s,
            end_sample: e,
        })
        .collect();
    Ok(out)
}

/// Writes each segment as `<stem>_segNNN.wav` in `out_dir`.
pub fn write_segments<T: Real>(
    clip: &AudioClip<T>,
    segments: &[SegmentSpec],
    out_dir: impl AsRef<Path>,
    stem: &str,
) -> Result<Vec<PathBuf>, AudioError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    segments
        .iter()
        .enumerate()
        .map(|(i, &seg)| {
            let path = out_dir.join(format!("{stem}_seg{i:03}.wav"));
            write_wav_i16(&clip.slice(seg)?, &path)?;
            Ok(path)
        })
        .collect()
}
