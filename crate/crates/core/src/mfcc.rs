//! MFCC chain: pre-emphasis, framing, Hamming window, FFT magnitude,
//! triangular mel filterbank, log energy and cosine transform.

use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::audio_io::AudioClip;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum MfccError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("pre-emphasis coefficient {0} outside [0, 1)")]
    InvalidAlpha(f64),
    #[error("window length {0} is below 2")]
    WindowTooShort(usize),
    #[error("frequency {0} Hz is negative")]
    NegativeFrequency(f64),
    #[error("frame of {frame_len} samples does not fit FFT size {fft_size}")]
    FrameExceedsFft { frame_len: usize, fft_size: usize },
    #[error("spectrum has {found} bins, filterbank expects {expected}")]
    BinMismatch { expected: usize, found: usize },
    #[error("invalid filterbank: {0}")]
    InvalidFilterbank(String),
    #[error("{bands} mel bands cannot produce {ceps} cepstral coefficients")]
    TooFewBands { bands: usize, ceps: usize },
    #[error("segment of {len} samples is shorter than one frame ({frame_len})")]
    SegmentTooShort { len: usize, frame_len: usize },
    #[error("invalid MFCC configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccConfig {
    pub frame_s: f64,
    pub hop_s: f64,
    pub pre_emphasis: f64,
    pub n_filters: usize,
    pub n_ceps: usize,
    pub f_min: f64,
    /// Upper filterbank edge; Nyquist when `None`.
    pub f_max: Option<f64>,
    /// FFT length; next power of two above the frame when `None`.
    pub fft_size: Option<usize>,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_s: 0.032,
            hop_s: 0.016,
            pre_emphasis: 0.95,
            n_filters: 26,
            n_ceps: 13,
            f_min: 0.0,
            f_max: None,
            fft_size: None,
            log_floor: 1e-10,
        }
    }
}

/// `y[0] = x[0]`, `y[n] = x[n] − alpha·x[n−1]`.
pub fn pre_emphasis<T: Real>(signal: &[T], alpha: f64) -> Result<Vec<T>, MfccError> {
    if signal.is_empty() {
        return Err(MfccError::EmptySignal);
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(MfccError::InvalidAlpha(alpha));
    }
    let a = T::of(alpha);
    let mut out = Vec::with_capacity(signal.len());
    out.push(signal[0]);
    out.extend(signal.windows(2).map(|w| w[1] - a * w[0]));
    Ok(out)
}

/// Row-major frames of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix<T> {
    data: Vec<T>,
    frame_len: usize,
    hop: usize,
}

impl<T: Real> FrameMatrix<T> {
    pub fn len(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frame(&self, i: usize) -> &[T] {
        &self.data[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.frame_len)
    }
}

/// Splits into `floor((L − frame_len)/hop) + 1` frames, dropping the trailing
/// remainder. A signal shorter than one frame becomes a single zero-padded frame.
pub fn frame_signal<T: Real>(signal: &[T], frame_len: usize, hop: usize) -> Result<FrameMatrix<T>, MfccError> {
    if frame_len == 0 || hop == 0 || hop > frame_len {
        return Err(MfccError::InvalidConfig(format!(
            "need 0 < hop <= frame_len, got hop {hop}, frame_len {frame_len}"
        )));
    }
    let data = if signal.len() < frame_len {
        let mut d = signal.to_vec();
        d.resize(frame_len, T::zero());
        d
    } else {
        let count = (signal.len() - frame_len) / hop + 1;
        let mut d = Vec::with_capacity(count * frame_len);
        for i in 0..count {
            d.extend_from_slice(&signal[i * hop..i * hop + frame_len]);
        }
        d
    };
    Ok(FrameMatrix { data, frame_len, hop })
}

/// Frame and hop durations converted to samples by rounding.
pub fn frame_signal_seconds<T: Real>(
    signal: &[T],
    frame_s: f64,
    hop_s: f64,
    sample_rate: u32,
) -> Result<FrameMatrix<T>, MfccError> {
    let (frame_len, hop) = frame_geometry(frame_s, hop_s, sample_rate)?;
    frame_signal(signal, frame_len, hop)
}

fn frame_geometry(frame_s: f64, hop_s: f64, sample_rate: u32) -> Result<(usize, usize), MfccError> {
    if sample_rate == 0 || !(hop_s > 0.0) || frame_s < hop_s {
        return Err(MfccError::InvalidConfig(format!(
            "need sample_rate > 0 and frame_s >= hop_s > 0, got {sample_rate}, {frame_s}, {hop_s}"
        )));
    }
    let sr = sample_rate as f64;
    let frame_len = ((frame_s * sr).round() as usize).max(1);
    let hop = ((hop_s * sr).round() as usize).clamp(1, frame_len);
    Ok((frame_len, hop))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowWeights<T> {
    weights: Vec<T>,
}

impl<T: Real> WindowWeights<T> {
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Pointwise product; `frame` must have the window's length.
    pub fn apply(&self, frame: &[T]) -> Vec<T> {
        assert_eq!(frame.len(), self.weights.len(), "window/frame length mismatch");
        frame.iter().zip(&self.weights).map(|(&x, &w)| x * w).collect()
    }
}

/// `w[n] = 0.54 − 0.46·cos(2πn/(N−1))`.
pub fn hamming_window<T: Real>(n: usize) -> Result<WindowWeights<T>, MfccError> {
    if n < 2 {
        return Err(MfccError::WindowTooShort(n));
    }
    let denom = (n - 1) as f64;
    let weights = (0..n)
        .map(|i| T::of(0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos()))
        .collect();
    Ok(WindowWeights { weights })
}

/// Reusable FFT plan producing `|X_k|` for `k = 0..=fft_size/2`.
#[derive(Clone)]
pub struct SpectrumAnalyzer<T: Real> {
    fft_size: usize,
    plan: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for SpectrumAnalyzer<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer").field("fft_size", &self.fft_size).finish()
    }
}

impl<T: Real> SpectrumAnalyzer<T> {
    pub fn new(fft_size: usize) -> Self {
        let plan = FftPlanner::new().plan_fft_forward(fft_size);
        Self { fft_size, plan }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn magnitudes(&self, frame: &[T]) -> Result<Vec<T>, MfccError> {
        if frame.len() > self.fft_size {
            return Err(MfccError::FrameExceedsFft {
                frame_len: frame.len(),
                fft_size: self.fft_size,
            });
        }
        let mut buf: Vec<Complex<T>> = frame.iter().map(|&x| Complex::new(x, T::zero())).collect();
        buf.resize(self.fft_size, Complex::new(T::zero(), T::zero()));
        self.plan.process(&mut buf);
        Ok(buf[..self.n_bins()].iter().map(|c| c.norm()).collect())
    }
}

/// Magnitude spectrum of a frame zero-padded to `fft_size`
/// (next power of two at or above the frame length when `None`).
pub fn magnitude_spectrum<T: Real>(frame: &[T], fft_size: Option<usize>) -> Result<Vec<T>, MfccError> {
    let n = fft_size.unwrap_or_else(|| frame.len().max(1).next_power_of_two());
    SpectrumAnalyzer::new(n).magnitudes(frame)
}

/// `2595·log10(1 + f/700)`.
pub fn hz_to_mel<T: Real>(f: T) -> Result<T, MfccError> {
    if f < T::zero() {
        return Err(MfccError::NegativeFrequency(f.as_f64()));
    }
    Ok(T::of(2595.0) * (T::one() + f / T::of(700.0)).log10())
}

pub fn mel_to_hz<T: Real>(m: T) -> Result<T, MfccError> {
    if m < T::zero() {
        return Err(MfccError::NegativeFrequency(m.as_f64()));
    }
    Ok(T::of(700.0) * (T::of(10.0).powf(m / T::of(2595.0)) - T::one()))
}

/// Triangular filters over FFT bins, peak 1 at each center bin.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank<T> {
    weights: Vec<Vec<T>>,
    center_hz: Vec<T>,
    center_bins: Vec<usize>,
    f_min: f64,
    f_max: f64,
}

impl<T: Real> MelFilterbank<T> {
    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn filter(&self, m: usize) -> &[T] {
        &self.weights[m]
    }

    pub fn center_hz(&self) -> &[T] {
        &self.center_hz
    }

    /// Bin edges: entry `m + 1` is the center bin of filter `m`.
    pub fn edge_bins(&self) -> &[usize] {
        &self.center_bins
    }

    pub fn f_range(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }
}

/// `n_filters + 2` mel-spaced points between `f_min` and `f_max`, each mapped
/// to bin `floor((fft_size + 1)·f/sample_rate)`; filter `m` rises from point
/// `m` to point `m + 1` and falls to zero at point `m + 2`.
pub fn build_mel_filterbank<T: Real>(
    n_filters: usize,
    fft_size: usize,
    sample_rate: u32,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank<T>, MfccError> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_filters < 2 {
        return Err(MfccError::InvalidFilterbank(format!("need at least 2 filters, got {n_filters}")));
    }
    if !(f_min >= 0.0 && f_min < f_max && f_max <= nyquist) {
        return Err(MfccError::InvalidFilterbank(format!(
            "need 0 <= f_min < f_max <= {nyquist}, got {f_min}..{f_max}"
        )));
    }
    if fft_size < 2 {
        return Err(MfccError::InvalidFilterbank(format!("fft size {fft_size} too small")));
    }
    let mel_lo = hz_to_mel(f_min)?;
    let mel_hi = hz_to_mel(f_max)?;
    let step = (mel_hi - mel_lo) / (n_filters + 1) as f64;
    let points_hz: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect::<Result<_, _>>()?;
    let bins: Vec<usize> = points_hz
        .iter()
        .map(|&hz| (((fft_size + 1) as f64) * hz / sample_rate as f64).floor() as usize)
        .collect();
    if let Some(i) = bins.windows(2).position(|w| w[1] <= w[0]) {
        return Err(MfccError::InvalidFilterbank(format!(
            "mel points {i} and {} share FFT bin {}; use fewer filters or a larger FFT",
            i + 1,
            bins[i]
        )));
    }

    let n_bins = fft_size / 2 + 1;
    let weights = (1..=n_filters)
        .map(|m| {
            let (lo, mid, hi) = (bins[m - 1], bins[m], bins[m + 1]);
            (0..n_bins)
                .map(|k| {
                    if k > lo && k <= mid {
                        T::of((k - lo) as f64 / (mid - lo) as f64)
                    } else if k > mid && k < hi {
                        T::of((hi - k) as f64 / (hi - mid) as f64)
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(MelFilterbank {
        weights,
        center_hz: points_hz[1..=n_filters].iter().map(|&v| T::of(v)).collect(),
        center_bins: bins,
        f_min,
        f_max,
    })
}

/// `ln(max(S_m², floor))` where `S_m = Σ_k |X_k|·M_m(k)`.
pub fn log_mel_energies<T: Real>(
    magnitudes: &[T],
    bank: &MelFilterbank<T>,
    floor: f64,
) -> Result<Vec<T>, MfccError> {
    if magnitudes.len() != bank.n_bins() {
        return Err(MfccError::BinMismatch {
            expected: bank.n_bins(),
            found: magnitudes.len(),
        });
    }
    let floor = T::of(floor);
    Ok(bank
        .weights
        .iter()
        .map(|row| {
            let s: T = row.iter().zip(magnitudes).map(|(&w, &x)| w * x).sum();
            (s * s).max(floor).ln()
        })
        .collect())
}

/// Cepstral coefficients `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccVector<T>(pub Vec<T>);

impl<T: Real> MfccVector<T> {
    pub fn coefficients(&self) -> &[T] {
        &self.0
    }
}

/// `y(k) = Σ_{m=1}^{M} x_m·cos(k(m − 0.5)π/M)` for `k = 0..num_ceps`.
pub fn dct_cepstrum<T: Real>(log_mel: &[T], num_ceps: usize) -> Result<MfccVector<T>, MfccError> {
    let m = log_mel.len();
    if m < num_ceps || m == 0 {
        return Err(MfccError::TooFewBands { bands: m, ceps: num_ceps });
    }
    let scale = T::PI() / T::of_usize(m);
    let coeffs = (0..num_ceps)
        .map(|k| {
            log_mel
                .iter()
                .enumerate()
                .map(|(i, &x)| x * (T::of_usize(k) * (T::of_usize(i) + T::of(0.5)) * scale).cos())
                .sum()
        })
        .collect();
    Ok(MfccVector(coeffs))
}

/// Precomputed window, FFT plan and filterbank for one sample rate.
#[derive(Debug, Clone)]
pub struct MfccExtractor<T: Real> {
    config: MfccConfig,
    frame_len: usize,
    hop: usize,
    window: WindowWeights<T>,
    spectrum: SpectrumAnalyzer<T>,
    bank: MelFilterbank<T>,
}

impl<T: Real> MfccExtractor<T> {
    pub fn new(config: MfccConfig, sample_rate: u32) -> Result<Self, MfccError> {
        let (frame_len, hop) = frame_geometry(config.frame_s, config.hop_s, sample_rate)?;
        if config.n_filters < config.n_ceps {
            return Err(MfccError::TooFewBands {
                bands: config.n_filters,
                ceps: config.n_ceps,
            });
        }
        let fft_size = config.fft_size.unwrap_or_else(|| frame_len.next_power_of_two());
        if fft_size < frame_len {
            return Err(MfccError::FrameExceedsFft { frame_len, fft_size });
        }
        let f_max = config.f_max.unwrap_or(sample_rate as f64 / 2.0);
        Ok(Self {
            config,
            frame_len,
            hop,
            window: hamming_window(frame_len)?,
            spectrum: SpectrumAnalyzer::new(fft_size),
            bank: build_mel_filterbank(config.n_filters, fft_size, sample_rate, config.f_min, f_max)?,
        })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn filterbank(&self) -> &MelFilterbank<T> {
        &self.bank
    }

    /// Coefficients of one raw (already pre-emphasized) frame.
    pub fn frame_coefficients(&self, frame: &[T]) -> Result<MfccVector<T>, MfccError> {
        let windowed = self.window.apply(frame);
        let mags = self.spectrum.magnitudes(&windowed)?;
        let log_mel = log_mel_energies(&mags, &self.bank, self.config.log_floor)?;
        dct_cepstrum(&log_mel, self.config.n_ceps)
    }

    /// `F × n_ceps` matrix, one row per frame.
    pub fn matrix(&self, signal: &[T]) -> Result<Vec<MfccVector<T>>, MfccError> {
        if signal.len() < self.frame_len {
            return Err(MfccError::SegmentTooShort {
                len: signal.len(),
                frame_len: self.frame_len,
            });
        }
        let emphasized = pre_emphasis(signal, self.config.pre_emphasis)?;
        let frames = frame_signal(&emphasized, self.frame_len, self.hop)?;
        frames.frames().map(|f| self.frame_coefficients(f)).collect()
    }

    /// Column means of [`Self::matrix`].
    pub fn features(&self, signal: &[T]) -> Result<MfccVector<T>, MfccError> {
        let rows = self.matrix(signal)?;
        let mut acc = vec![T::zero(); self.config.n_ceps];
        for row in &rows {
            for (a, &v) in acc.iter_mut().zip(row.coefficients()) {
                *a = *a + v;
            }
        }
        let n = T::of_usize(rows.len());
        Ok(MfccVector(acc.into_iter().map(|v| v / n).collect()))
    }
}

/// Mean MFCC vector of a segment.
pub fn mfcc_features<T: Real>(segment: &AudioClip<T>, config: &MfccConfig) -> Result<MfccVector<T>, MfccError> {
    MfccExtractor::new(*config, segment.sample_rate())?.features(segment.samples())
}

/// One CSV row per frame, columns `mfcc_0..`.
pub fn write_matrix_csv<T: Real, W: Write>(rows: &[MfccVector<T>], mut w: W) -> std::io::Result<()> {
    let width = rows.first().map_or(0, |r| r.0.len());
    let header: Vec<String> = (0..width).map(|k| format!("mfcc_{k}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.0.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
