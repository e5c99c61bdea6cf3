//! Frame-wise F0 estimation, cycle marking and harmonics-to-noise ratio.
//!
//! F0 comes from the normalized autocorrelation of each mean-removed frame.
//! The estimate is the first local peak within 90% of the best peak in the
//! admissible lag range, refined by parabolic interpolation.

use std::io::Write;

use thiserror::Error;

use crate::audio_io::AudioClip;
use crate::scalar::{mean, median, Real};

#[derive(Debug, Error, PartialEq)]
pub enum PitchError {
    #[error("frame of {len} samples is shorter than two periods of f_min ({required} samples)")]
    FrameTooShort { len: usize, required: usize },
    #[error("invalid pitch configuration: {0}")]
    InvalidConfig(String),
    #[error("no voiced frames")]
    NoVoicedFrames,
    #[error("invalid period track: {0}")]
    InvalidTrack(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub voicing_threshold: f64,
    /// Analysis frame length in seconds.
    pub frame_s: f64,
    pub hop_s: f64,
    pub hnr_floor_db: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f_min: 75.0,
            f_max: 500.0,
            voicing_threshold: 0.45,
            frame_s: 0.04,
            hop_s: 0.01,
            hnr_floor_db: -20.0,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<(), PitchError> {
        if !(self.f_min > 0.0 && self.f_max > self.f_min) {
            return Err(PitchError::InvalidConfig(format!(
                "need 0 < f_min < f_max, got {}..{}",
                self.f_min, self.f_max
            )));
        }
        if !(self.hop_s > 0.0 && self.frame_s > 0.0) {
            return Err(PitchError::InvalidConfig("frame_s and hop_s must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.voicing_threshold) {
            return Err(PitchError::InvalidConfig("voicing_threshold must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Minimum frame length in samples accepted by [`estimate_f0_frame`].
    pub fn min_frame_len(&self, sample_rate: u32) -> usize {
        (2.0 * sample_rate as f64 / self.f_min).ceil() as usize
    }
}

/// Per-cycle periods (seconds) and peak amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodTrack<T> {
    periods: Vec<T>,
    amplitudes: Vec<T>,
}

impl<T: Real> PeriodTrack<T> {
    pub fn new(periods: Vec<T>, amplitudes: Vec<T>) -> Result<Self, PitchError> {
        if periods.len() != amplitudes.len() {
            return Err(PitchError::InvalidTrack(format!(
                "{} periods but {} amplitudes",
                periods.len(),
                amplitudes.len()
            )));
        }
        if periods.iter().any(|t| !(t.is_finite() && *t > T::zero())) {
            return Err(PitchError::InvalidTrack("periods must be finite and positive".into()));
        }
        if amplitudes.iter().any(|a| !(a.is_finite() && *a >= T::zero())) {
            return Err(PitchError::InvalidTrack("amplitudes must be finite and non-negative".into()));
        }
        Ok(Self { periods, amplitudes })
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

/// Per-frame F0 values; `None` marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour<T> {
    pub values: Vec<Option<T>>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl<T: Real> F0Contour<T> {
    pub fn frame_hop_s(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    pub fn voiced(&self) -> Vec<T> {
        self.values.iter().flatten().copied().collect()
    }

    /// `frame_index,f0_hz` rows; unvoiced frames leave the value empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "frame_index,f0_hz")?;
        for (i, v) in self.values.iter().enumerate() {
            match v {
                Some(f) => writeln!(w, "{i},{f}")?,
                None => writeln!(w, "{i},")?,
            }
        }
        Ok(())
    }
}

fn remove_mean<T: Real>(frame: &[T]) -> Vec<T> {
    let m = mean(frame).unwrap_or_else(T::zero);
    frame.iter().map(|&v| v - m).collect()
}

/// Normalized cross-product of `x[..n-lag]` with `x[lag..]`.
pub(crate) fn normalized_autocorrelation<T: Real>(x: &[T], lag: usize) -> T {
    if lag >= x.len() {
        return T::zero();
    }
    let (head, tail) = (&x[..x.len() - lag], &x[lag..]);
    let mut cross = T::zero();
    let mut e0 = T::zero();
    let mut e1 = T::zero();
    for (&a, &b) in head.iter().zip(tail) {
        cross = cross + a * b;
        e0 = e0 + a * a;
        e1 = e1 + b * b;
    }
    let denom = (e0 * e1).sqrt();
    if denom <= T::min_positive_value() {
        T::zero()
    } else {
        cross / denom
    }
}

/// Estimates F0 of one frame, or `None` when the frame is unvoiced.
pub fn estimate_f0_frame<T: Real>(
    frame: &[T],
    sample_rate: u32,
    cfg: &PitchConfig,
) -> Result<Option<T>, PitchError> {
    cfg.validate()?;
    let required = cfg.min_frame_len(sample_rate);
    if frame.len() < required {
        return Err(PitchError::FrameTooShort {
            len: frame.len(),
            required,
        });
    }
    let sr = sample_rate as f64;
    let lag_lo = ((sr / cfg.f_max).ceil() as usize).max(2);
    let lag_hi = ((sr / cfg.f_min).floor() as usize).min(frame.len() - 2);
    if lag_lo > lag_hi {
        return Ok(None);
    }

    let x = remove_mean(frame);
    let peak = frame.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let spread = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(spread > peak * T::epsilon().sqrt()) {
        return Ok(None);
    }
    // r[i] holds the lag lag_lo - 1 + i
    let r: Vec<T> = (lag_lo - 1..=lag_hi + 1)
        .map(|lag| normalized_autocorrelation(&x, lag))
        .collect();
    let at = |lag: usize| r[lag + 1 - lag_lo];

    let best = (lag_lo..=lag_hi)
        .map(at)
        .fold(T::neg_infinity(), T::max);
    let threshold = T::of(cfg.voicing_threshold);
    if !(best >= threshold) {
        return Ok(None);
    }
    let accept = best * T::of(0.9);
    let Some(lag) = (lag_lo..=lag_hi)
        .find(|&l| at(l) >= accept && at(l) >= at(l - 1) && at(l) >= at(l + 1))
    else {
        return Ok(None);
    };

    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = a - T::of(2.0) * b + c;
    let shift = if denom < T::zero() {
        (T::of(0.5) * (a - c) / denom).max(T::of(-0.5)).min(T::of(0.5))
    } else {
        T::zero()
    };
    let f0 = T::of(sr) / (T::of_usize(lag) + shift);
    Ok(Some(f0.max(T::of(cfg.f_min)).min(T::of(cfg.f_max))))
}

fn frame_starts(len: usize, frame_len: usize, hop: usize) -> Vec<usize> {
    if len < frame_len {
        Vec::new()
    } else {
        (0..=(len - frame_len) / hop).map(|i| i * hop).collect()
    }
}

fn frame_geometry(sample_rate: u32, cfg: &PitchConfig) -> (usize, usize) {
    let sr = sample_rate as f64;
    let frame_len = ((cfg.frame_s * sr).round() as usize).max(cfg.min_frame_len(sample_rate));
    let hop = ((cfg.hop_s * sr).round() as usize).max(1);
    (frame_len, hop)
}

/// Runs [`estimate_f0_frame`] over the whole clip. Clips shorter than one
/// analysis frame yield an empty contour.
pub fn f0_contour<T: Real>(clip: &AudioClip<T>, cfg: &PitchConfig) -> Result<F0Contour<T>, PitchError> {
    cfg.validate()?;
    let sr = clip.sample_rate();
    let (frame_len, hop) = frame_geometry(sr, cfg);
    let x = clip.samples();
    let values = frame_starts(x.len(), frame_len, hop)
        .into_iter()
        .map(|s| estimate_f0_frame(&x[s..s + frame_len], sr, cfg))
        .collect::<Result<_, _>>()?;
    Ok(F0Contour {
        values,
        frame_len,
        hop,
        sample_rate: sr,
    })
}

/// Sub-sample peak position offset and height from three samples around `i`.
fn refine_peak<T: Real>(y: &[T], i: usize) -> (T, T) {
    if i == 0 || i + 1 >= y.len() {
        return (T::zero(), y[i]);
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let denom = a - T::of(2.0) * b + c;
    if denom >= T::zero() {
        return (T::zero(), b);
    }
    let shift = (T::of(0.5) * (a - c) / denom).max(T::of(-0.5)).min(T::of(0.5));
    (shift, b - T::of(0.25) * (a - c) * shift)
}

fn argmax<T: Real>(y: &[T], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if y[i] > y[best] {
            best = i;
        }
    }
    best
}

/// Places cycle marks on successive waveform peaks inside voiced regions.
///
/// Each voiced run of contour frames is one region. Marks follow the dominant
/// polarity of the region; the next mark is the highest sample between 0.8 and
/// 1.2 local periods past the current one. Period `i` spans marks `i` and
/// `i+1` and carries the peak amplitude at mark `i`. Periods outside
/// `[1/f_max, 1/f_min]` are discarded.
pub fn extract_period_track<T: Real>(
    clip: &AudioClip<T>,
    contour: &F0Contour<T>,
    cfg: &PitchConfig,
) -> Result<PeriodTrack<T>, PitchError> {
    if contour.values.iter().all(Option::is_none) {
        return Err(PitchError::NoVoicedFrames);
    }
    let x = clip.samples();
    let sr = T::of(clip.sample_rate() as f64);
    let t_min = T::of(1.0 / cfg.f_max);
    let t_max = T::of(1.0 / cfg.f_min);
    let mut periods = Vec::new();
    let mut amplitudes = Vec::new();

    let mut f = 0;
    while f < contour.values.len() {
        if contour.values[f].is_none() {
            f += 1;
            continue;
        }
        let first = f;
        while f + 1 < contour.values.len() && contour.values[f + 1].is_some() {
            f += 1;
        }
        let last = f;
        f += 1;

        let start = first * contour.hop;
        let end = (last * contour.hop + contour.frame_len).min(x.len());
        if end <= start + 2 {
            continue;
        }
        let region = &x[start..end];
        let hi = region.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = region.iter().copied().fold(T::infinity(), T::min);
        let sign = if hi >= -lo { T::one() } else { -T::one() };
        let y: Vec<T> = region.iter().map(|&v| v * sign).collect();

        let local_period = |pos: usize| -> T {
            let center = start + pos;
            let idx = (center.saturating_sub(contour.frame_len / 2) as f64 / contour.hop as f64)
                .round() as usize;
            let idx = idx.clamp(first, last);
            sr / contour.values[idx].expect("frame inside voiced run")
        };

        let p0 = local_period(0).to_usize().unwrap_or(1).max(1);
        let mut mark = argmax(&y, 0, p0.min(y.len() - 1));
        let (mut mark_shift, mut mark_amp) = refine_peak(&y, mark);
        loop {
            let p = local_period(mark);
            let win_lo = (T::of_usize(mark) + T::of(0.8) * p).ceil().to_usize().unwrap_or(usize::MAX);
            let win_hi = (T::of_usize(mark) + T::of(1.2) * p).floor().to_usize().unwrap_or(usize::MAX);
            if win_hi + 1 >= y.len() || win_lo > win_hi {
                break;
            }
            let next = argmax(&y, win_lo, win_hi);
            let (next_shift, next_amp) = refine_peak(&y, next);
            let samples = T::of_usize(next - mark) + next_shift - mark_shift;
            let period = samples / sr;
            if period >= t_min && period <= t_max {
                periods.push(period);
                amplitudes.push(mark_amp.abs());
            }
            mark = next;
            mark_shift = next_shift;
            mark_amp = next_amp;
        }
    }
    PeriodTrack::new(periods, amplitudes)
}

/// HNR estimate for one frame; `degenerate` is set when the autocorrelation
/// at the pitch lag is non-positive and the floor was substituted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hnr<T> {
    pub db: T,
    pub degenerate: bool,
}

/// `10·log10(r / (1 − r))` with `r` clamped below one.
pub fn hnr_from_autocorrelation<T: Real>(r: T) -> T {
    let r = r.min(T::one() - T::epsilon());
    T::of(10.0) * (r / (T::one() - r)).log10()
}

pub fn compute_hnr<T: Real>(
    frame: &[T],
    sample_rate: u32,
    f0: T,
    cfg: &PitchConfig,
) -> Result<Hnr<T>, PitchError> {
    if !(f0 > T::zero()) {
        return Err(PitchError::InvalidConfig(format!("f0 must be positive, got {f0}")));
    }
    let lag = (T::of(sample_rate as f64) / f0).round().to_usize().unwrap_or(0);
    if lag == 0 || lag >= frame.len() {
        return Err(PitchError::FrameTooShort {
            len: frame.len(),
            required: lag + 1,
        });
    }
    let r = normalized_autocorrelation(&remove_mean(frame), lag);
    if r <= T::zero() {
        return Ok(Hnr {
            db: T::of(cfg.hnr_floor_db),
            degenerate: true,
        });
    }
    Ok(Hnr {
        db: hnr_from_autocorrelation(r),
        degenerate: false,
    })
}

/// Mean HNR over the voiced frames of a contour.
pub fn mean_hnr<T: Real>(
    clip: &AudioClip<T>,
    contour: &F0Contour<T>,
    cfg: &PitchConfig,
) -> Result<T, PitchError> {
    let x = clip.samples();
    let values = contour
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|f0| (i * contour.hop, f0)))
        .map(|(s, f0)| compute_hnr(&x[s..s + contour.frame_len], clip.sample_rate(), f0, cfg).map(|h| h.db))
        .collect::<Result<Vec<_>, _>>()?;
    mean(&values).ok_or(PitchError::NoVoicedFrames)
}

/// `(mean voiced F0, median voiced F0)`.
pub fn f0_and_pitch_features<T: Real>(contour: &F0Contour<T>) -> Result<(T, T), PitchError> {
    let voiced = contour.voiced();
    match (mean(&voiced), median(&voiced)) {
        (Some(m), Some(md)) => Ok((m, md)),
        _ => Err(PitchError::NoVoicedFrames),
    }
}
