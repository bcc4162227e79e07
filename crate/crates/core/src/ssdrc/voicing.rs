use rustfft::num_complex::Complex64;

use super::{Result, SsdrcError};
use crate::audio::stft::RealFft;
use crate::audio::{AudioBuffer, ComplexSpectrogram};

const F0_MIN_HZ: f64 = 50.0;
const F0_MAX_HZ: f64 = 400.0;
/// Frames quieter than this many dB below the loudest frame count as unvoiced.
const ENERGY_GATE_DB: f64 = 40.0;

/// Per-frame voicing probability, one value per spectrogram frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VoicingTrack(Vec<f64>);

impl VoicingTrack {
    /// Values are clamped into `[0, 1]`.
    pub fn new(p: Vec<f64>) -> Self {
        Self(p.into_iter().map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 }).collect())
    }

    pub fn uniform(value: f64, frames: usize) -> Self {
        Self::new(vec![value; frames])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Voicing probability of each analysis frame of `spec`.
///
/// The probability is the peak of the frame's normalised autocorrelation
/// over lags covering 50-400 Hz, zeroed for frames more than 40 dB below
/// the loudest frame. `spec` must have been computed from `buffer`.
pub fn voicing_probability(spec: &ComplexSpectrogram, buffer: &AudioBuffer) -> Result<VoicingTrack> {
    let rate = buffer.sample_rate();
    let config = spec.config();
    let expected = config.num_frames(buffer.len(), rate);
    if spec.sample_rate() != rate || spec.num_frames() != expected {
        return Err(SsdrcError::ConfigMismatch(format!(
            "spectrogram has {} frames at {} Hz, buffer implies {expected} frames at {rate} Hz",
            spec.num_frames(),
            spec.sample_rate()
        )));
    }
    let n = config.frame_length(rate);
    let hop = config.hop_length(rate);
    let min_lag = (rate as f64 / F0_MAX_HZ).round() as usize;
    let max_lag = ((rate as f64 / F0_MIN_HZ).round() as usize).min(n.saturating_sub(1));

    let x = buffer.samples();
    let energies: Vec<f64> = (0..expected)
        .map(|t| x[t * hop..t * hop + n].iter().map(|s| s * s).sum::<f64>())
        .collect();
    let peak = energies.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(VoicingTrack::uniform(0.0, expected));
    }
    let gate = peak * 10f64.powf(-ENERGY_GATE_DB / 10.0);

    let fft_len = (2 * n).next_power_of_two();
    let mut fft = RealFft::new(fft_len);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); fft_len / 2 + 1];
    let mut acf = vec![0.0; fft_len];
    let mut frame = vec![0.0; n];
    let mut cum = vec![0.0; n + 1];

    let p = (0..expected)
        .map(|t| {
            if energies[t] < gate || energies[t] <= 0.0 || min_lag > max_lag {
                return 0.0;
            }
            let raw = &x[t * hop..t * hop + n];
            let mean = raw.iter().sum::<f64>() / n as f64;
            for (f, &s) in frame.iter_mut().zip(raw) {
                *f = s - mean;
            }
            for (i, &s) in frame.iter().enumerate() {
                cum[i + 1] = cum[i] + s * s;
            }
            fft.forward(&frame, &mut spectrum);
            for c in spectrum.iter_mut() {
                *c = Complex64::new(c.norm_sqr(), 0.0);
            }
            fft.inverse(&spectrum, &mut acf);
            // acf[lag] = sum_n x[n] x[n + lag]; normalise by the energies of
            // the two overlapping segments
            (min_lag..=max_lag)
                .map(|lag| {
                    let head = cum[n - lag];
                    let tail = cum[n] - cum[lag];
                    let denom = (head * tail).sqrt();
                    if denom > 0.0 { acf[lag] / denom } else { 0.0 }
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(VoicingTrack::new(p))
}
