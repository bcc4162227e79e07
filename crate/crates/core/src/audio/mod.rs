//! Audio buffers, WAV I/O, resampling, STFT analysis/synthesis and mel features.

mod mel;
mod resample;
pub(crate) mod stft;
mod wav;

pub use mel::{log_mel_energies, mel_filterbank, mel_spectrogram, mel_spectrogram_with, MelRange, MelSpectrogram, MEL_BANDS};
pub use resample::resample;
pub use stft::{istft, stft, ComplexSpectrogram, StftConfig, Window};
pub use wav::{load_wav, save_wav};

use thiserror::Error;

/// Sample rate every processing stage works at.
pub const CANONICAL_RATE: u32 = 16_000;

pub type Result<T> = std::result::Result<T, AudioError>;

#[derive(Error, Debug)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(std::path::PathBuf),
    #[error("malformed WAV file: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedCodec(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("buffer contains non-finite samples")]
    NonFinite,
    #[error("buffer is empty")]
    Empty,
    #[error("buffer of {len} samples is shorter than one {frame}-sample frame")]
    TooShort { len: usize, frame: usize },
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
    #[error("inconsistent spectrogram: {0}")]
    InconsistentSpectrogram(String),
}

/// Mono time-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Wraps `samples`, rejecting a zero rate and NaN/Inf samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSampleRate);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite);
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Samples `[start, start + len)`, clipped to the buffer.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let start = start.min(self.samples.len());
        let end = (start + len).min(self.samples.len());
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Builds a buffer from samples already known to be finite.
    pub(crate) fn from_trusted(samples: Vec<f64>, sample_rate: u32) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self { samples, sample_rate }
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64).sqrt()
}

/// Level in dB relative to full scale (amplitude 1.0).
pub fn to_db(amplitude: f64) -> f64 {
    20.0 * amplitude.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Mean-square power of each non-overlapping `frame`-sample block (a trailing
/// partial block is included).
pub(crate) fn frame_powers(x: &[f64], frame: usize) -> Vec<f64> {
    x.chunks(frame)
        .map(|c| c.iter().map(|s| s * s).sum::<f64>() / c.len() as f64)
        .collect()
}

/// Flags each `frame`-sample block whose power lies within `range_db` of the
/// loudest block. All-silent input yields no active frames.
pub(crate) fn active_frames(x: &[f64], frame: usize, range_db: f64) -> Vec<bool> {
    let powers = frame_powers(x, frame);
    let peak = powers.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return vec![false; powers.len()];
    }
    let floor = peak * 10f64.powf(-range_db / 10.0);
    powers.iter().map(|&p| p > 0.0 && p >= floor).collect()
}

/// Scales `y` so that its RMS equals `target_rms`. A silent `y` or zero
/// target gives silence.
pub(crate) fn match_rms(y: &mut [f64], target_rms: f64) {
    let current = rms(y);
    if current <= 0.0 || target_rms <= 0.0 {
        y.iter_mut().for_each(|s| *s = 0.0);
        return;
    }
    let g = target_rms / current;
    y.iter_mut().for_each(|s| *s *= g);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_zero_rate() {
        assert!(matches!(
            AudioBuffer::new(vec![0.0, f64::NAN], 16000),
            Err(AudioError::NonFinite)
        ));
        assert!(matches!(
            AudioBuffer::new(vec![0.0], 0),
            Err(AudioError::InvalidSampleRate)
        ));
    }

    #[test]
    fn duration() {
        let b = AudioBuffer::silence(24000, 16000).unwrap();
        assert_eq!(b.duration_seconds(), 1.5);
    }

    #[test]
    fn active_frames_gate() {
        let mut x = vec![0.0; 3 * 320];
        x[..320].iter_mut().for_each(|s| *s = 1.0);
        x[320..640].iter_mut().for_each(|s| *s = 0.005); // -46 dB
        x[640..].iter_mut().for_each(|s| *s = 0.02); // -34 dB
        assert_eq!(active_frames(&x, 320, 40.0), vec![true, false, true]);
        assert_eq!(active_frames(&[0.0; 640], 320, 40.0), vec![false, false]);
    }
}
