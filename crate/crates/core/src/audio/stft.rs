use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, AudioError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Hamming,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let (a0, a1) = match self {
            Window::Hann => (0.5, 0.5),
            Window::Hamming => (0.54, 0.46),
        };
        (0..n)
            .map(|i| a0 - a1 * (2.0 * PI * i as f64 / n as f64).cos())
            .collect()
    }
}

/// Frame/hop/FFT geometry. Durations are in milliseconds so the same config
/// works at any sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame_length_ms: f64,
    pub hop_length_ms: f64,
    pub fft_size: usize,
    #[serde(default)]
    pub window: Window,
}

impl Default for StftConfig {
    /// 50 ms Hann frames, 12.5 ms hop, 2048-point FFT.
    fn default() -> Self {
        Self {
            frame_length_ms: 50.0,
            hop_length_ms: 12.5,
            fft_size: 2048,
            window: Window::Hann,
        }
    }
}

impl StftConfig {
    pub fn frame_length(&self, sample_rate: u32) -> usize {
        (self.frame_length_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_length(&self, sample_rate: u32) -> usize {
        (self.hop_length_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of whole frames that fit in `len` samples (no padding).
    pub fn num_frames(&self, len: usize, sample_rate: u32) -> usize {
        let n = self.frame_length(sample_rate);
        if len < n {
            0
        } else {
            (len - n) / self.hop_length(sample_rate) + 1
        }
    }

    /// Checks the geometry at `sample_rate`, including that the window sums
    /// to a constant when overlap-added at the hop.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let n = self.frame_length(sample_rate);
        let hop = self.hop_length(sample_rate);
        if n == 0 || hop == 0 {
            return Err(AudioError::InvalidConfig("frame and hop must be at least one sample".into()));
        }
        if hop > n {
            return Err(AudioError::InvalidConfig(format!("hop {hop} exceeds frame {n}")));
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < n {
            return Err(AudioError::InvalidConfig(format!(
                "fft size {} must be a power of two >= frame length {n}",
                self.fft_size
            )));
        }
        let w = self.window.coefficients(n);
        let sums: Vec<f64> = (0..hop).map(|i| w.iter().skip(i).step_by(hop).sum()).collect();
        let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().cloned().fold(0.0, f64::max);
        if lo <= 0.0 || (hi - lo) / hi > 1e-9 {
            return Err(AudioError::InvalidConfig(format!(
                "{:?} window of {n} samples is not constant-overlap-add at hop {hop}",
                self.window
            )));
        }
        Ok(())
    }
}

/// One-sided complex spectra, `num_frames × (fft_size/2 + 1)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Vec<Complex64>,
    num_frames: usize,
    config: StftConfig,
    sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn new(data: Vec<Complex64>, num_frames: usize, config: StftConfig, sample_rate: u32) -> Result<Self> {
        if data.len() != num_frames * config.num_bins() {
            return Err(AudioError::InconsistentSpectrogram(format!(
                "{} values for {num_frames} frames of {} bins",
                data.len(),
                config.num_bins()
            )));
        }
        Ok(Self { data, num_frames, config, sample_rate })
    }

    pub fn zeros(num_frames: usize, config: StftConfig, sample_rate: u32) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); num_frames * config.num_bins()],
            num_frames,
            config,
            sample_rate,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_bins(&self) -> usize {
        self.config.num_bins()
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let b = self.num_bins();
        &self.data[t * b..(t + 1) * b]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        let b = self.num_bins();
        &mut self.data[t * b..(t + 1) * b]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.num_bins())
    }

    pub fn frames_mut(&mut self) -> impl Iterator<Item = &mut [Complex64]> {
        let b = self.num_bins();
        self.data.chunks_exact_mut(b)
    }

    /// Centre frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.config.fft_size as f64
    }

    pub fn magnitudes(&self, t: usize) -> Vec<f64> {
        self.frame(t).iter().map(|c| c.norm()).collect()
    }
}

pub(crate) struct RealFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl RealFft {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            buf: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// One-sided spectrum of `input` zero-padded to the transform size.
    pub(crate) fn forward(&mut self, input: &[f64], out: &mut [Complex64]) {
        debug_assert!(input.len() <= self.n && out.len() == self.n / 2 + 1);
        for (i, c) in self.buf.iter_mut().enumerate() {
            *c = Complex64::new(input.get(i).copied().unwrap_or(0.0), 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.copy_from_slice(&self.buf[..out.len()]);
        // exact zeros keep DC/Nyquist bins purely real
        out[0].im = 0.0;
        out[self.n / 2].im = 0.0;
    }

    /// Real signal (length `n`, scaled by `1/n`) from a one-sided spectrum.
    pub(crate) fn inverse(&mut self, spectrum: &[Complex64], out: &mut [f64]) {
        let half = self.n / 2;
        self.buf[..=half].copy_from_slice(spectrum);
        self.buf[0].im = 0.0;
        self.buf[half].im = 0.0;
        for k in 1..half {
            self.buf[self.n - k] = spectrum[k].conj();
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for (o, c) in out.iter_mut().zip(&self.buf) {
            *o = c.re * scale;
        }
    }
}

/// Windowed, zero-padded, one-sided short-time Fourier transform.
pub fn stft(buffer: &AudioBuffer, config: &StftConfig) -> Result<ComplexSpectrogram> {
    let rate = buffer.sample_rate();
    config.validate(rate)?;
    let n = config.frame_length(rate);
    let hop = config.hop_length(rate);
    if buffer.len() < n {
        return Err(AudioError::TooShort { len: buffer.len(), frame: n });
    }
    let num_frames = config.num_frames(buffer.len(), rate);
    let window = config.window.coefficients(n);
    let mut fft = RealFft::new(config.fft_size);
    let mut spec = ComplexSpectrogram::zeros(num_frames, *config, rate);
    let mut frame = vec![0.0; n];
    let x = buffer.samples();
    for (t, out) in spec.frames_mut().enumerate() {
        let start = t * hop;
        for ((f, &s), &w) in frame.iter_mut().zip(&x[start..start + n]).zip(&window) {
            *f = s * w;
        }
        fft.forward(&frame, out);
    }
    Ok(spec)
}

/// Weighted overlap-add resynthesis, normalised by the summed squared
/// window. Output has `(T - 1) * hop + frame_length` samples; positions the
/// window never reaches (the first sample of a periodic Hann) come out as 0.
pub fn istft(spec: &ComplexSpectrogram) -> Result<AudioBuffer> {
    let config = spec.config();
    let rate = spec.sample_rate();
    config.validate(rate)?;
    let n = config.frame_length(rate);
    let hop = config.hop_length(rate);
    if spec.num_frames() == 0 {
        return Err(AudioError::InconsistentSpectrogram("no frames".into()));
    }
    let out_len = (spec.num_frames() - 1) * hop + n;
    let window = config.window.coefficients(n);
    let mut fft = RealFft::new(config.fft_size);
    let mut acc = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut time = vec![0.0; config.fft_size];
    for (t, frame) in spec.frames().enumerate() {
        fft.inverse(frame, &mut time);
        let start = t * hop;
        for i in 0..n {
            acc[start + i] += time[i] * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    let samples = acc
        .iter()
        .zip(&norm)
        .map(|(&a, &w)| if w > 1e-12 { a / w } else { 0.0 })
        .collect::<Vec<_>>();
    AudioBuffer::new(samples, rate)
}
