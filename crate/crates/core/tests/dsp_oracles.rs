use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxpd::audio_io::AudioClip;
use voxpd::mfcc::{
    build_mel_filterbank, dct_cepstrum, hamming_window, hz_to_mel, log_mel_energies, magnitude_spectrum,
    mfcc_features, pre_emphasis, MfccConfig, MfccExtractor,
};

fn dft_magnitudes(x: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangles rebuilt from first principles: point bins, rising then falling edges.
fn oracle_filterbank(n_filters: usize, fft: usize, sr: u32, f_lo: f64, f_hi: f64) -> Vec<Vec<f64>> {
    let mut points = Vec::new();
    for i in 0..n_filters + 2 {
        let m = mel(f_lo) + (mel(f_hi) - mel(f_lo)) * i as f64 / (n_filters + 1) as f64;
        points.push(((fft + 1) as f64 * inv_mel(m) / sr as f64).floor() as usize);
    }
    let mut bank = vec![vec![0.0; fft / 2 + 1]; n_filters];
    for m in 0..n_filters {
        let (l, c, r) = (points[m], points[m + 1], points[m + 2]);
        for k in l + 1..=c {
            bank[m][k] = (k - l) as f64 / (c - l) as f64;
        }
        for k in c + 1..r {
            bank[m][k] = (r - k) as f64 / (r - c) as f64;
        }
    }
    bank
}

fn oracle_dct(x: &[f64], n_ceps: usize) -> Vec<f64> {
    let m = x.len();
    let mut out = vec![0.0; n_ceps];
    for (k, o) in out.iter_mut().enumerate() {
        for (i, &v) in x.iter().enumerate() {
            *o += v * (k as f64 * (i as f64 + 0.5) * PI / m as f64).cos();
        }
    }
    out
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn fft_matches_brute_force_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = 1usize << rng.random_range(1..=10);
        let len = rng.random_range(1..=n);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = magnitude_spectrum(&x, Some(n)).unwrap();
        let slow = dft_magnitudes(&x, n);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn filterbank_and_energies_match_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (n_filters, fft, sr, lo, hi) in [
        (26, 512, 16_000, 0.0, 8_000.0),
        (20, 1024, 44_100, 50.0, 11_025.0),
        (40, 2048, 22_050, 0.0, 11_025.0),
        (10, 256, 8_000, 100.0, 3_800.0),
    ] {
        let bank = build_mel_filterbank::<f64>(n_filters, fft, sr, lo, hi).unwrap();
        let oracle = oracle_filterbank(n_filters, fft, sr, lo, hi);
        for m in 0..n_filters {
            assert_eq!(bank.filter(m), &oracle[m][..], "filter {m}");
        }
        let mags: Vec<f64> = (0..fft / 2 + 1).map(|_| rng.random_range(0.0..5.0)).collect();
        let got = log_mel_energies(&mags, &bank, 1e-10).unwrap();
        for (m, g) in got.iter().enumerate() {
            let mut s = 0.0;
            for k in 0..mags.len() {
                s += mags[k] * oracle[m][k];
            }
            let want = (s * s).max(1e-10).ln();
            assert!(rel_close(*g, want, 1e-12), "{g} vs {want}");
        }
    }
}

#[test]
fn dct_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let m = rng.random_range(13..=40);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-30.0..10.0)).collect();
        let got = dct_cepstrum(&x, 13).unwrap();
        for (a, b) in got.coefficients().iter().zip(oracle_dct(&x, 13)) {
            assert!(rel_close(*a, b, 1e-12), "{a} vs {b}");
        }
    }
}

#[test]
fn mel_anchor() {
    let m = hz_to_mel(1000.0f64).unwrap();
    assert!((999.5..=1000.5).contains(&m), "{m}");
}

/// Every stage recomputed with plain loops and the brute-force DFT.
fn reference_mfcc(x: &[f64], sr: u32) -> Vec<f64> {
    let frame = (0.032 * sr as f64).round() as usize;
    let hop = (0.016 * sr as f64).round() as usize;
    let fft = frame.next_power_of_two();
    let mut y = vec![x[0]];
    for n in 1..x.len() {
        y.push(x[n] - 0.95 * x[n - 1]);
    }
    let bank = oracle_filterbank(26, fft, sr, 0.0, sr as f64 / 2.0);
    let n_frames = (y.len() - frame) / hop + 1;
    let mut acc = vec![0.0; 13];
    for f in 0..n_frames {
        let w: Vec<f64> = (0..frame)
            .map(|n| y[f * hop + n] * (0.54 - 0.46 * (2.0 * PI * n as f64 / (frame - 1) as f64).cos()))
            .collect();
        let mags = dft_magnitudes(&w, fft);
        let logs: Vec<f64> = bank
            .iter()
            .map(|row| {
                let s: f64 = row.iter().zip(&mags).map(|(a, b)| a * b).sum();
                (s * s).max(1e-10).ln()
            })
            .collect();
        for (a, c) in acc.iter_mut().zip(oracle_dct(&logs, 13)) {
            *a += c / n_frames as f64;
        }
    }
    acc
}

#[test]
fn sine_440_matches_reference_pipeline() {
    let sr = 16_000;
    let x: Vec<f64> = (0..8000).map(|n| 0.5 * (2.0 * PI * 440.0 * n as f64 / sr as f64).sin()).collect();
    let clip = AudioClip::new(x.clone(), sr, "sine").unwrap();
    let got = mfcc_features(&clip, &MfccConfig::default()).unwrap();
    let want = reference_mfcc(&x, sr);
    for (k, (a, b)) in got.coefficients().iter().zip(&want).enumerate() {
        assert!(rel_close(*a, *b, 1e-9), "c{k}: {a} vs {b}");
    }
}

#[test]
fn window_and_pre_emphasis_basics() {
    let w = hamming_window::<f64>(5).unwrap();
    assert!((w.weights()[0] - 0.08).abs() < 1e-15);
    assert!((w.weights()[2] - 1.0).abs() < 1e-15);
    assert_eq!(pre_emphasis(&[1.0, 1.0, 1.0], 0.95).unwrap(), vec![1.0, 0.050000000000000044, 0.050000000000000044]);
}

#[test]
fn single_precision_tracks_double() {
    let sr = 16_000;
    let x: Vec<f64> = (0..6000)
        .map(|n| 0.3 * (2.0 * PI * 210.0 * n as f64 / sr as f64).sin() + 0.1 * (2.0 * PI * 1300.0 * n as f64 / sr as f64).sin())
        .collect();
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    let a = MfccExtractor::<f64>::new(MfccConfig::default(), sr).unwrap().features(&x).unwrap();
    let b = MfccExtractor::<f32>::new(MfccConfig::default(), sr).unwrap().features(&x32).unwrap();
    for (p, q) in a.coefficients().iter().zip(b.coefficients()) {
        assert!((p - *q as f64).abs() < 1e-2 * p.abs().max(1.0), "{p} vs {q}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Scaling by g adds 2·ln g to every log band: c0 shifts by 2M·ln g, the rest are unchanged.
    #[test]
    fn gain_only_moves_c0(gain in 0.05f64..0.95, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..4000).map(|n| {
            0.5 * (2.0 * PI * 180.0 * n as f64 / 16_000.0).sin() + rng.random_range(-0.3..0.3)
        }).collect();
        let ex = MfccExtractor::<f64>::new(MfccConfig::default(), 16_000).unwrap();
        let base = ex.features(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * gain).collect();
        let moved = ex.features(&scaled).unwrap();
        let (b, m) = (base.coefficients(), moved.coefficients());
        prop_assert!((m[0] - b[0] - 2.0 * 26.0 * gain.ln()).abs() < 1e-8);
        for k in 1..13 {
            prop_assert!((m[k] - b[k]).abs() < 1e-8, "c{}: {} vs {}", k, m[k], b[k]);
        }
    }

    /// Delaying a 5 s stationary sine by one hop barely moves its mean MFCCs.
    #[test]
    fn one_hop_shift_is_tolerated(freq in 80.0f64..3000.0) {
        let sr = 16_000.0;
        let tone = |n: usize| 0.5 * (2.0 * PI * freq * n as f64 / sr).sin();
        let ex = MfccExtractor::<f64>::new(MfccConfig::default(), 16_000).unwrap();
        let hop = ex.hop();
        let a: Vec<f64> = (0..80_000).map(tone).collect();
        let b: Vec<f64> = (hop..80_000 + hop).map(tone).collect();
        let (fa, fb) = (ex.features(&a).unwrap(), ex.features(&b).unwrap());
        let norm = fa.coefficients().iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = fa.coefficients().iter().zip(fb.coefficients()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        prop_assert!(diff < 0.01 * norm, "{} Hz: |d| {} vs |c| {}", freq, diff, norm);
    }
}
