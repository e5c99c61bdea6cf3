//! Voice-based Parkinson's disease screening: WAV segmentation, pitch and
//! perturbation measures, MFCCs, a 24-feature table, seven classifiers and a
//! repeated k-fold evaluation protocol.
//!
//! The signal-processing and feature code is generic over [`scalar::Real`]
//! (`f32` or `f64`); classifiers and evaluation work in `f64`.

pub mod audio_io;
pub mod classifiers;
pub mod eval;
pub mod features;
pub mod mfcc;
pub mod perturbation;
pub mod pitch;
pub mod rng;
pub mod scalar;

pub use scalar::Real;

pub type AudioClipF64 = audio_io::AudioClip<f64>;
pub type AudioClipF32 = audio_io::AudioClip<f32>;
pub type PeriodTrackF64 = pitch::PeriodTrack<f64>;
pub type PeriodTrackF32 = pitch::PeriodTrack<f32>;
pub type F0ContourF64 = pitch::F0Contour<f64>;
pub type MfccExtractorF64 = mfcc::MfccExtractor<f64>;
pub type FeatureVectorF64 = features::FeatureVector<f64>;
pub type FeatureMatrixF64 = features::FeatureMatrix<f64>;

/// Version string embedded in written artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
