//! Maskers and exact-SNR mixing.
//!
//! Speech-shaped noise is seeded Gaussian noise coloured by an all-pole fit to
//! the long-term spectrum of a reference corpus. Competing-speaker noise is cut
//! from a user-supplied single-talker recording. Both are delivered at the
//! canonical rate and at -26 dBFS RMS.

pub mod lpc;
mod mix;
mod ssn;

pub use mix::{active_speech_power, mix_at_snr, MixResult};
pub use ssn::{csn_from_buffer, csn_load, ssn_generate, LPC_ORDER};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;

/// Masker RMS in dBFS.
pub const NOISE_LEVEL_DBFS: f64 = -26.0;

/// Frame length for the active-speech level, in seconds.
pub const ACTIVE_FRAME_S: f64 = 0.02;
/// Frames more than this far below the loudest frame do not count as speech.
pub const ACTIVE_RANGE_DB: f64 = 40.0;

pub type Result<T> = std::result::Result<T, NoiseError>;

#[derive(Error, Debug)]
pub enum NoiseError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("reference speech is {0:.3} s long; at least 3 s is required")]
    ReferenceTooShort(f64),
    #[error("requested duration must be positive and finite")]
    ZeroDuration,
    #[error("reference speech has no usable spectrum")]
    DegenerateReference,
    #[error("segment [{offset_s:.3}, {end_s:.3}] s lies outside a {available_s:.3} s recording")]
    SegmentOutOfRange { offset_s: f64, end_s: f64, available_s: f64 },
    #[error("sample rates differ: speech {speech} Hz, noise {noise} Hz")]
    RateMismatch { speech: u32, noise: u32 },
    #[error("noise has {noise} samples but speech needs {speech}")]
    NoiseTooShort { speech: usize, noise: usize },
    #[error("speech is silent")]
    SilentSpeech,
    #[error("noise segment is silent")]
    SilentNoise,
    #[error("SNR must be finite")]
    InvalidSnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseType {
    Ssn,
    Csn,
}

impl NoiseType {
    pub fn label(self) -> &'static str {
        match self {
            NoiseType::Ssn => "SSN",
            NoiseType::Csn => "CSN",
        }
    }

    /// The three SNRs each masker is evaluated at by default.
    pub fn canonical_snrs(self) -> [f64; 3] {
        match self {
            NoiseType::Ssn => [0.0, -5.0, -10.0],
            NoiseType::Csn => [-7.0, -14.0, -21.0],
        }
    }
}

impl fmt::Display for NoiseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for NoiseType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ssn" => Ok(NoiseType::Ssn),
            "csn" => Ok(NoiseType::Csn),
            other => Err(format!("unknown noise type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCondition {
    pub noise_type: NoiseType,
    pub snr_db: f64,
}

impl NoiseCondition {
    pub fn new(noise_type: NoiseType, snr_db: f64) -> Self {
        Self { noise_type, snr_db }
    }

    /// SSN at 0/-5/-10 dB then CSN at -7/-14/-21 dB.
    pub fn canonical_grid() -> Vec<NoiseCondition> {
        [NoiseType::Ssn, NoiseType::Csn]
            .into_iter()
            .flat_map(|t| t.canonical_snrs().into_iter().map(move |s| NoiseCondition::new(t, s)))
            .collect()
    }
}

impl fmt::Display for NoiseCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} dB", self.noise_type, self.snr_db)
    }
}
