//! Cycle-to-cycle perturbation measures over a [`PeriodTrack`].
//!
//! The neighbourhood measures (RAP, PPQ5, APQ3, APQ5) average only over
//! interior cycles whose whole neighbourhood exists and divide by the number of
//! such cycles.

use std::fmt;

use thiserror::Error;

use crate::pitch::PeriodTrack;
use crate::scalar::{mean, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    JitterAbsolute,
    JitterRelative,
    JitterRap,
    JitterPpq5,
    ShimmerDb,
    ShimmerRelative,
    ShimmerApq3,
    ShimmerApq5,
}

impl Measure {
    pub const ALL: [Measure; 8] = [
        Measure::JitterAbsolute,
        Measure::JitterRelative,
        Measure::JitterRap,
        Measure::JitterPpq5,
        Measure::ShimmerDb,
        Measure::ShimmerRelative,
        Measure::ShimmerApq3,
        Measure::ShimmerApq5,
    ];

    /// Fewest cycles the measure is defined for.
    pub fn min_cycles(self) -> usize {
        match self {
            Measure::JitterAbsolute
            | Measure::JitterRelative
            | Measure::ShimmerDb
            | Measure::ShimmerRelative => 2,
            Measure::JitterRap | Measure::ShimmerApq3 => 3,
            Measure::JitterPpq5 | Measure::ShimmerApq5 => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::JitterAbsolute => "jitter_absolute",
            Measure::JitterRelative => "jitter_relative",
            Measure::JitterRap => "jitter_rap",
            Measure::JitterPpq5 => "jitter_ppq5",
            Measure::ShimmerDb => "shimmer_db",
            Measure::ShimmerRelative => "shimmer_relative",
            Measure::ShimmerApq3 => "shimmer_apq3",
            Measure::ShimmerApq5 => "shimmer_apq5",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error("{measure} needs at least {required} cycles, track has {found}")]
    InsufficientCycles {
        measure: Measure,
        required: usize,
        found: usize,
    },
    #[error("{measure}: amplitude at cycle {index} is not positive")]
    NonPositiveAmplitude { measure: Measure, index: usize },
    #[error("{measure}: mean of the sequence is zero")]
    ZeroMean { measure: Measure },
}

fn require(measure: Measure, n: usize) -> Result<(), PerturbationError> {
    if n < measure.min_cycles() {
        Err(PerturbationError::InsufficientCycles {
            measure,
            required: measure.min_cycles(),
            found: n,
        })
    } else {
        Ok(())
    }
}

fn mean_abs_successive_diff<T: Real>(xs: &[T]) -> T {
    let total: T = xs.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
    total / T::of_usize(xs.len() - 1)
}

/// Mean of `|x_i − mean(x_{i−h}..=x_{i+h})|` over interior `i`.
///
/// The deviation is accumulated as `Σ (x_i − x_n) / width`, which is exactly
/// zero on constant input.
fn mean_local_deviation<T: Real>(xs: &[T], half_width: usize) -> T {
    let width = 2 * half_width + 1;
    let denom = T::of_usize(width);
    let total: T = xs
        .windows(width)
        .map(|w| {
            let center = w[half_width];
            let spread: T = w.iter().map(|&v| center - v).sum();
            (spread / denom).abs()
        })
        .sum();
    total / T::of_usize(xs.len() + 1 - width)
}

fn relative<T: Real>(measure: Measure, xs: &[T], numerator: T) -> Result<T, PerturbationError> {
    let m = mean(xs).unwrap_or_else(T::zero);
    if m == T::zero() {
        return Err(PerturbationError::ZeroMean { measure });
    }
    Ok(numerator / m * T::of(100.0))
}

/// Mean absolute difference of consecutive periods, in seconds.
pub fn jitter_absolute<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    require(Measure::JitterAbsolute, track.len())?;
    Ok(mean_abs_successive_diff(track.periods()))
}

/// [`jitter_absolute`] over the mean period, in percent.
pub fn jitter_relative<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::JitterRelative;
    require(m, track.len())?;
    let t = track.periods();
    relative(m, t, mean_abs_successive_diff(t))
}

/// Relative average perturbation (three-point), percent.
pub fn jitter_rap<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::JitterRap;
    require(m, track.len())?;
    let t = track.periods();
    relative(m, t, mean_local_deviation(t, 1))
}

/// Five-point period perturbation quotient, percent.
pub fn jitter_ppq5<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::JitterPpq5;
    require(m, track.len())?;
    let t = track.periods();
    relative(m, t, mean_local_deviation(t, 2))
}

/// Mean absolute consecutive amplitude ratio in decibels.
pub fn shimmer_db<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::ShimmerDb;
    require(m, track.len())?;
    let a = track.amplitudes();
    if let Some(index) = a.iter().position(|&v| v <= T::zero()) {
        return Err(PerturbationError::NonPositiveAmplitude { measure: m, index });
    }
    let twenty = T::of(20.0);
    let total: T = a.windows(2).map(|w| (twenty * (w[1] / w[0]).log10()).abs()).sum();
    Ok(total / T::of_usize(a.len() - 1))
}

pub fn shimmer_relative<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::ShimmerRelative;
    require(m, track.len())?;
    let a = track.amplitudes();
    relative(m, a, mean_abs_successive_diff(a))
}

pub fn shimmer_apq3<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::ShimmerApq3;
    require(m, track.len())?;
    let a = track.amplitudes();
    relative(m, a, mean_local_deviation(a, 1))
}

pub fn shimmer_apq5<T: Real>(track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    let m = Measure::ShimmerApq5;
    require(m, track.len())?;
    let a = track.amplitudes();
    relative(m, a, mean_local_deviation(a, 2))
}

pub fn compute<T: Real>(measure: Measure, track: &PeriodTrack<T>) -> Result<T, PerturbationError> {
    match measure {
        Measure::JitterAbsolute => jitter_absolute(track),
        Measure::JitterRelative => jitter_relative(track),
        Measure::JitterRap => jitter_rap(track),
        Measure::JitterPpq5 => jitter_ppq5(track),
        Measure::ShimmerDb => shimmer_db(track),
        Measure::ShimmerRelative => shimmer_relative(track),
        Measure::ShimmerApq3 => shimmer_apq3(track),
        Measure::ShimmerApq5 => shimmer_apq5(track),
    }
}

/// All eight measures in [`Measure::ALL`] order.
pub fn compute_all<T: Real>(track: &PeriodTrack<T>) -> Result<[T; 8], PerturbationError> {
    let mut out = [T::zero(); 8];
    for (slot, m) in out.iter_mut().zip(Measure::ALL) {
        *slot = compute(m, track)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periods(t: &[f64]) -> PeriodTrack<f64> {
        PeriodTrack::new(t.to_vec(), vec![1.0; t.len()]).unwrap()
    }

    fn amps(a: &[f64]) -> PeriodTrack<f64> {
        PeriodTrack::new(vec![0.01; a.len()], a.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn jitter_hand_cases() {
        let t = periods(&[0.010, 0.011, 0.010]);
        close(jitter_absolute(&t).unwrap(), 0.001);
        close(jitter_absolute(&periods(&[0.010, 0.012])).unwrap(), 0.002);
        close(jitter_relative(&t).unwrap(), 0.001 / (0.031 / 3.0) * 100.0);
        close(jitter_rap(&t).unwrap(), (0.011 - 0.031 / 3.0) / (0.031 / 3.0) * 100.0);
        let t5 = periods(&[0.010, 0.011, 0.010, 0.011, 0.010]);
        close(jitter_ppq5(&t5).unwrap(), 0.4 / 10.4 * 100.0);
    }

    #[test]
    fn ramps_have_zero_local_deviation() {
        assert!(jitter_rap(&periods(&[0.001, 0.002, 0.003])).unwrap().abs() < 1e-12);
        assert!(jitter_ppq5(&periods(&[1e-3, 2e-3, 3e-3, 4e-3, 5e-3])).unwrap().abs() < 1e-12);
        assert!(shimmer_apq3(&amps(&[1.0, 2.0, 3.0])).unwrap().abs() < 1e-12);
        assert!(shimmer_apq5(&amps(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn shimmer_hand_cases() {
        let expect = 20.0 * 2f64.log10();
        close(shimmer_db(&amps(&[1.0, 2.0])).unwrap(), expect);
        close(shimmer_db(&amps(&[2.0, 1.0])).unwrap(), expect);
        let a = amps(&[1.0, 1.1, 1.0]);
        close(shimmer_relative(&a).unwrap(), 0.1 / (3.1 / 3.0) * 100.0);
        close(shimmer_apq3(&a).unwrap(), (1.1 - 3.1 / 3.0) / (3.1 / 3.0) * 100.0);
        close(shimmer_apq5(&amps(&[10.0, 11.0, 10.0, 11.0, 10.0])).unwrap(), 0.4 / 10.4 * 100.0);
    }

    #[test]
    fn constant_sequences_are_zero() {
        let track = PeriodTrack::new(vec![0.008; 9], vec![0.4; 9]).unwrap();
        for v in compute_all(&track).unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn too_few_cycles_names_the_measure() {
        let track = periods(&[0.01, 0.01, 0.01, 0.01]);
        assert_eq!(
            jitter_ppq5(&track),
            Err(PerturbationError::InsufficientCycles {
                measure: Measure::JitterPpq5,
                required: 5,
                found: 4
            })
        );
        assert!(jitter_rap(&periods(&[0.01, 0.01])).is_err());
        assert!(jitter_absolute(&periods(&[0.01])).is_err());
    }

    #[test]
    fn zero_amplitude_is_rejected_by_shimmer_db() {
        let err = shimmer_db(&amps(&[1.0, 0.0, 1.0])).unwrap_err();
        assert_eq!(err, PerturbationError::NonPositiveAmplitude { measure: Measure::ShimmerDb, index: 1 });
    }

    #[test]
    fn works_in_single_precision() {
        let t = PeriodTrack::new(vec![0.010f32, 0.011, 0.010], vec![1.0f32; 3]).unwrap();
        assert!((jitter_relative(&t).unwrap() - 9.677).abs() < 1e-2);
    }
}
