use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{Result, SiibError, BAND_HI_HZ, BAND_LO_HZ, FRAME_LEN, LOG_FLOOR, NUM_BANDS};
use crate::audio::{resample, AudioBuffer, CANONICAL_RATE};

const ORDER: usize = 4;
// Bandwidth of a 4th-order gammatone relative to the ERB at its centre.
const ERB_SCALE: f64 = 1.019;

/// Equivalent rectangular bandwidth in Hz.
pub fn erb(f: f64) -> f64 {
    24.7 * (4.37e-3 * f + 1.0)
}

fn erb_rate(f: f64) -> f64 {
    21.4 * (4.37e-3 * f + 1.0).log10()
}

fn erb_rate_inv(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 4.37e-3
}

/// `n` centre frequencies equally spaced on the ERB-rate scale, inclusive of
/// both ends.
pub fn erb_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (erb_rate(lo), erb_rate(hi));
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| erb_rate_inv(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Log envelope energies, one row per gammatone band and one column per
/// 20 ms frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFeatures {
    matrix: Vec<Vec<f64>>,
    band_centers_hz: Vec<f64>,
}

impl EnvelopeFeatures {
    pub fn num_bands(&self) -> usize {
        self.matrix.len()
    }

    pub fn num_frames(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    pub fn band(&self, k: usize) -> &[f64] {
        &self.matrix[k]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn band_centers_hz(&self) -> &[f64] {
        &self.band_centers_hz
    }

    pub fn frame_rate_hz(&self) -> f64 {
        CANONICAL_RATE as f64 / FRAME_LEN as f64
    }
}

/// Analytic signal by zeroing the negative half of the spectrum.
fn analytic(x: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&s| Complex::new(s, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, c) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *c *= w / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Envelope of one complex gammatone channel: the analytic signal is shifted
/// down by `fc` and run through four cascaded one-pole low-passes, so the
/// output magnitude is the band envelope with unit gain at `fc`.
fn band_envelope_energy(x: &[Complex<f64>], fc: f64, fs: f64) -> Vec<f64> {
    let a = (-2.0 * PI * ERB_SCALE * erb(fc) / fs).exp();
    let g = 1.0 - a;
    let step = fc / fs;
    let mut state = [Complex::new(0.0, 0.0); ORDER];
    let frames = x.len() / FRAME_LEN;
    let mut out = Vec::with_capacity(frames);
    let mut acc = 0.0;
    for (n, &s) in x[..frames * FRAME_LEN].iter().enumerate() {
        // Reduce the phase before the trig call to keep it exact on long inputs.
        let phase = -2.0 * PI * (step * n as f64).fract();
        let mut v = s * Complex::from_polar(1.0, phase);
        for st in state.iter_mut() {
            *st = v * g + *st * a;
            v = *st;
        }
        acc += v.norm_sqr();
        if (n + 1) % FRAME_LEN == 0 {
            out.push(acc / FRAME_LEN as f64);
            acc = 0.0;
        }
    }
    out
}

/// 32-band gammatone envelope features at 50 frames per second.
///
/// Input at another rate is resampled to 16 kHz first. Frames are
/// non-overlapping 20 ms blocks; a trailing partial block is dropped.
pub fn envelope_features(buffer: &AudioBuffer) -> Result<EnvelopeFeatures> {
    let x = resample(buffer, CANONICAL_RATE)?;
    if x.len() < CANONICAL_RATE as usize / 2 {
        return Err(SiibError::TooShort(x.duration_seconds()));
    }
    let centres = erb_space(BAND_LO_HZ, BAND_HI_HZ, NUM_BANDS);
    let fs = CANONICAL_RATE as f64;
    let z = analytic(x.samples());
    let matrix = centres
        .iter()
        .map(|&fc| {
            band_envelope_energy(&z, fc, fs)
                .into_iter()
                .map(|e| e.max(LOG_FLOOR).ln())
                .collect()
        })
        .collect();
    Ok(EnvelopeFeatures {
        matrix,
        band_centers_hz: centres,
    })
}
