//! Frequency-domain stage: adaptive formant sharpening, adaptive high
//! frequency boost and a fixed pre-emphasis, applied as real gains on the
//! STFT and resynthesised by overlap-add.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::voicing::{voicing_probability, VoicingTrack};
use super::{Result, SsdrcError};
use crate::audio::stft::RealFft;
use crate::audio::{from_db, istft, match_rms, stft, AudioBuffer, AudioError, ComplexSpectrogram, StftConfig};

/// Cepstral coefficients kept for the spectral envelope at 16 kHz; scaled
/// with the sample rate so the liftering cut-off stays at the same quefrency.
const CEPSTRAL_COEFFS_AT_16K: f64 = 30.0;
const LOG_MAG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingConfig {
    /// Formant sharpening strength.
    pub beta: f64,
    /// Width of the frequency smoothing the envelope is contrasted against.
    pub sharpening_bandwidth_hz: f64,
    /// Symmetric limit on the sharpening gain.
    pub sharpening_clip_db: f64,
    pub hf_corner_hz: f64,
    pub hf_slope_db_per_octave: f64,
    pub hf_cap_db: f64,
    /// Limits on the composed gain of all three stages.
    pub clip_low_db: f64,
    pub clip_high_db: f64,
    pub stft: StftConfig,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            beta: 0.3,
            sharpening_bandwidth_hz: 700.0,
            sharpening_clip_db: 10.0,
            hf_corner_hz: 1000.0,
            hf_slope_db_per_octave: 3.0,
            hf_cap_db: 9.0,
            clip_low_db: -30.0,
            clip_high_db: 21.0,
            stft: StftConfig::default(),
        }
    }
}

impl ShapingConfig {
    pub fn with_beta(beta: f64) -> Self {
        Self { beta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.beta >= 0.0
            && self.sharpening_bandwidth_hz > 0.0
            && self.sharpening_clip_db >= 0.0
            && self.hf_corner_hz > 0.0
            && self.hf_cap_db >= 0.0
            && self.clip_low_db <= 0.0
            && self.clip_high_db >= 0.0;
        if ok && [self.beta, self.hf_slope_db_per_octave].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SsdrcError::InvalidConfig(format!("bad shaping parameters: {self:?}")))
        }
    }
}

/// Linear magnitude gains of the three shaping filters.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingGains {
    num_frames: usize,
    num_bins: usize,
    /// Sharpening, `num_frames × num_bins`.
    pub hs: Vec<f64>,
    /// High-frequency boost, `num_frames × num_bins`.
    pub hp: Vec<f64>,
    /// Pre-emphasis, `num_bins`, identical for every frame.
    pub hr: Vec<f64>,
}

impl ShapingGains {
    pub fn unity(num_frames: usize, num_bins: usize) -> Self {
        Self {
            num_frames,
            num_bins,
            hs: vec![1.0; num_frames * num_bins],
            hp: vec![1.0; num_frames * num_bins],
            hr: vec![1.0; num_bins],
        }
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn hs_frame(&self, t: usize) -> &[f64] {
        &self.hs[t * self.num_bins..(t + 1) * self.num_bins]
    }

    pub fn hp_frame(&self, t: usize) -> &[f64] {
        &self.hp[t * self.num_bins..(t + 1) * self.num_bins]
    }

    /// `hs·hp·hr` at `(t, k)`, clipped to `[low_db, high_db]`.
    pub fn composed(&self, t: usize, k: usize, low_db: f64, high_db: f64) -> f64 {
        let i = t * self.num_bins + k;
        (self.hs[i] * self.hp[i] * self.hr[k]).clamp(from_db(low_db), from_db(high_db))
    }
}

/// Formant sharpening gains: contrast between the cepstrally smoothed
/// log spectrum and a 700 Hz moving average of it, scaled by `beta` and the
/// frame's voicing probability.
pub fn adaptive_sharpening_gains(
    spec: &ComplexSpectrogram,
    voicing: &VoicingTrack,
    beta: f64,
    config: &ShapingConfig,
) -> Result<Vec<f64>> {
    if beta.is_nan() || beta < 0.0 {
        return Err(SsdrcError::InvalidConfig(format!("beta must be >= 0, got {beta}")));
    }
    check_track(spec, voicing)?;
    let bins = spec.num_bins();
    let fft_size = spec.config().fft_size;
    let rate = spec.sample_rate();
    let bin_hz = rate as f64 / fft_size as f64;
    let keep = ((CEPSTRAL_COEFFS_AT_16K * rate as f64 / 16000.0).round() as usize).clamp(1, fft_size / 2);
    let half_width = ((config.sharpening_bandwidth_hz / 2.0) / bin_hz).round() as usize;
    let clip = config.sharpening_clip_db;

    let mut fft = RealFft::new(fft_size);
    let mut log_spec = vec![Complex64::new(0.0, 0.0); bins];
    let mut cepstrum = vec![0.0; fft_size];
    let mut smooth = vec![Complex64::new(0.0, 0.0); bins];
    let mut envelope_db = vec![0.0; bins];
    let mut cum = vec![0.0; bins + 1];

    let mut hs = vec![1.0; spec.num_frames() * bins];
    for (t, (frame, out)) in spec.frames().zip(hs.chunks_exact_mut(bins)).enumerate() {
        let strength = beta * voicing.values()[t];
        if strength == 0.0 {
            continue;
        }
        spectral_envelope_db(frame, keep, &mut fft, &mut log_spec, &mut cepstrum, &mut smooth, &mut envelope_db);
        for k in 0..bins {
            cum[k + 1] = cum[k] + envelope_db[k];
        }
        for k in 0..bins {
            let lo = k.saturating_sub(half_width);
            let hi = (k + half_width + 1).min(bins);
            let local_mean = (cum[hi] - cum[lo]) / (hi - lo) as f64;
            let g_db = (strength * (envelope_db[k] - local_mean)).clamp(-clip, clip);
            out[k] = from_db(g_db);
        }
    }
    Ok(hs)
}

/// Cepstrally smoothed log-magnitude spectrum in dB, keeping quefrencies
/// below `keep` samples.
fn spectral_envelope_db(
    frame: &[Complex64],
    keep: usize,
    fft: &mut RealFft,
    log_spec: &mut [Complex64],
    cepstrum: &mut [f64],
    smooth: &mut [Complex64],
    out_db: &mut [f64],
) {
    for (l, c) in log_spec.iter_mut().zip(frame) {
        *l = Complex64::new(c.norm().max(LOG_MAG_FLOOR).ln(), 0.0);
    }
    fft.inverse(log_spec, cepstrum);
    // the real cepstrum is even: keep [0, keep) and its mirror
    let n = cepstrum.len();
    for (q, c) in cepstrum.iter_mut().enumerate() {
        if q >= keep && q <= n - keep {
            *c = 0.0;
        }
    }
    fft.forward(cepstrum, smooth);
    let to_db = 20.0 / std::f64::consts::LN_10;
    for (o, c) in out_db.iter_mut().zip(smooth.iter()) {
        *o = c.re * to_db;
    }
}

/// High-frequency boost: `p · clamp(slope · log2(f / corner), 0, cap)` dB.
pub fn hf_boost_gains(spec: &ComplexSpectrogram, voicing: &VoicingTrack, config: &ShapingConfig) -> Result<Vec<f64>> {
    check_track(spec, voicing)?;
    let bins = spec.num_bins();
    let ramp: Vec<f64> = (0..bins)
        .map(|k| hf_ramp_db(spec.bin_frequency(k), config))
        .collect();
    let mut hp = vec![1.0; spec.num_frames() * bins];
    for (out, &p) in hp.chunks_exact_mut(bins).zip(voicing.values()) {
        if p == 0.0 {
            continue;
        }
        for (g, r) in out.iter_mut().zip(&ramp) {
            *g = from_db(p * r);
        }
    }
    Ok(hp)
}

pub(crate) fn hf_ramp_db(f: f64, config: &ShapingConfig) -> f64 {
    if f <= config.hf_corner_hz {
        return 0.0;
    }
    (config.hf_slope_db_per_octave * (f / config.hf_corner_hz).log2()).clamp(0.0, config.hf_cap_db)
}

/// Fixed pre-emphasis response in dB at frequency `f`: +12 dB over
/// 1-4 kHz, -6 dB/octave below 500 Hz, raised-cosine transitions over
/// 500-1000 Hz and 4-5 kHz, flat 0 dB above 5 kHz. `floor_db` bounds the
/// low-frequency roll-off (it reaches -infinity at DC otherwise).
pub fn pre_emphasis_db(f: f64, floor_db: f64) -> f64 {
    const BOOST_DB: f64 = 12.0;
    let taper = |u: f64| 0.5 - 0.5 * (std::f64::consts::PI * u).cos();
    let g = if f < 500.0 {
        if f <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -6.0 * (500.0 / f).log2()
        }
    } else if f < 1000.0 {
        BOOST_DB * taper((f - 500.0) / 500.0)
    } else if f <= 4000.0 {
        BOOST_DB
    } else if f < 5000.0 {
        BOOST_DB * (1.0 - taper((f - 4000.0) / 1000.0))
    } else {
        0.0
    };
    g.max(floor_db)
}

/// Linear pre-emphasis gains for the one-sided bins of an `fft_size`
/// transform. Needs at least 8 kHz sampling so the boosted band exists.
pub fn pre_emphasis_gains(num_bins: usize, sample_rate: u32, floor_db: f64) -> Result<Vec<f64>> {
    if sample_rate < 8000 {
        return Err(SsdrcError::SampleRateTooLow(sample_rate));
    }
    let fft_size = 2 * (num_bins.max(2) - 1);
    Ok((0..num_bins)
        .map(|k| from_db(pre_emphasis_db(k as f64 * sample_rate as f64 / fft_size as f64, floor_db)))
        .collect())
}

/// Computes all three gain sets for `spec`.
pub fn shaping_gains(spec: &ComplexSpectrogram, voicing: &VoicingTrack, config: &ShapingConfig) -> Result<ShapingGains> {
    config.validate()?;
    Ok(ShapingGains {
        num_frames: spec.num_frames(),
        num_bins: spec.num_bins(),
        hs: adaptive_sharpening_gains(spec, voicing, config.beta, config)?,
        hp: hf_boost_gains(spec, voicing, config)?,
        hr: pre_emphasis_gains(spec.num_bins(), spec.sample_rate(), config.clip_low_db)?,
    })
}

/// Multiplies every bin by its composed real gain. Phases are untouched.
pub fn apply_gains(spec: &ComplexSpectrogram, gains: &ShapingGains, config: &ShapingConfig) -> Result<ComplexSpectrogram> {
    if gains.num_frames() != spec.num_frames() || gains.num_bins() != spec.num_bins() {
        return Err(SsdrcError::ConfigMismatch("gain grid does not match spectrogram".into()));
    }
    let mut out = spec.clone();
    for (t, frame) in out.frames_mut().enumerate() {
        for (k, c) in frame.iter_mut().enumerate() {
            *c *= gains.composed(t, k, config.clip_low_db, config.clip_high_db);
        }
    }
    Ok(out)
}

/// Spectral shaping of a whole utterance, RMS-matched to the input.
///
/// The signal is zero-padded by a frame on each side so every input sample
/// is covered by a full set of overlapping frames; the output has exactly
/// the input's length.
pub fn spectral_shaping(buffer: &AudioBuffer, config: &ShapingConfig) -> Result<AudioBuffer> {
    config.validate()?;
    let rate = buffer.sample_rate();
    if rate < 8000 {
        return Err(SsdrcError::SampleRateTooLow(rate));
    }
    config.stft.validate(rate)?;
    let n = config.stft.frame_length(rate);
    let hop = config.stft.hop_length(rate);
    if buffer.len() < n {
        return Err(AudioError::TooShort { len: buffer.len(), frame: n }.into());
    }
    let input_rms = buffer.rms();
    if input_rms == 0.0 {
        return Ok(AudioBuffer::silence(buffer.len(), rate)?);
    }

    let mut padded_len = n + buffer.len() + n;
    padded_len += (hop - (padded_len - n) % hop) % hop;
    let mut padded = vec![0.0; padded_len];
    padded[n..n + buffer.len()].copy_from_slice(buffer.samples());
    let padded = AudioBuffer::new(padded, rate)?;

    let spec = stft(&padded, &config.stft)?;
    let voicing = voicing_probability(&spec, &padded)?;
    let gains = shaping_gains(&spec, &voicing, config)?;
    let shaped = istft(&apply_gains(&spec, &gains, config)?)?;

    let mut y = shaped.samples()[n..n + buffer.len()].to_vec();
    match_rms(&mut y, input_rms);
    Ok(AudioBuffer::new(y, rate)?)
}

fn check_track(spec: &ComplexSpectrogram, voicing: &VoicingTrack) -> Result<()> {
    if voicing.len() != spec.num_frames() {
        return Err(SsdrcError::ConfigMismatch(format!(
            "voicing track has {} values for {} frames",
            voicing.len(),
            spec.num_frames()
        )));
    }
    Ok(())
}
