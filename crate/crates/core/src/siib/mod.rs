//! Intelligibility as an information rate between clean and degraded speech.
//!
//! Both signals pass through a 32-band gammatone filterbank; log envelope
//! energies at 50 frames per second, stacked with four frames of context, are
//! decorrelated by a transform estimated on the clean features. Each channel is
//! then treated as a Gaussian channel whose capacity follows from the
//! clean/degraded correlation, capped by a production-noise factor.
//!
//! Absolute scores depend on these choices; orderings between conditions are
//! what the metric is meant for.

mod gammatone;

pub use gammatone::{envelope_features, erb, erb_space, EnvelopeFeatures};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{active_frames, resample, AudioBuffer, AudioError, CANONICAL_RATE};

pub const NUM_BANDS: usize = 32;
pub const BAND_LO_HZ: f64 = 150.0;
pub const BAND_HI_HZ: f64 = 7500.0;
/// 20 ms at 16 kHz.
pub const FRAME_LEN: usize = 320;
pub const LOG_FLOOR: f64 = 1e-8;
/// Preceding frames stacked onto each frame.
pub const CONTEXT: usize = 4;
/// Correlation ceiling modelling noise in speech production.
pub const PRODUCTION_RHO: f64 = 0.75;
pub const VAD_RANGE_DB: f64 = 40.0;
/// Eigenchannels with less clean variance than this are dropped.
pub const MIN_EIGENVALUE: f64 = 1e-10;

pub type Result<T> = std::result::Result<T, SiibError>;

#[derive(Error, Debug)]
pub enum SiibError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("input is {0:.3} s long; at least 0.5 s is required")]
    TooShort(f64),
    #[error("clean and degraded lengths differ by {0} samples, more than one frame")]
    LengthMismatch(usize),
    #[error("no frames left after voice activity gating")]
    AllFramesGated,
    #[error("baseline score is zero")]
    ZeroBaseline,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Tunable parts of the metric. The defaults are the reference settings;
/// scores computed with other values are not comparable to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiibConfig {
    pub context_frames: usize,
    pub production_rho: f64,
    pub vad_range_db: f64,
}

impl Default for SiibConfig {
    fn default() -> Self {
        Self {
            context_frames: CONTEXT,
            production_rho: PRODUCTION_RHO,
            vad_range_db: VAD_RANGE_DB,
        }
    }
}

impl SiibConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.production_rho > 0.0 && self.production_rho < 1.0) {
            return Err(SiibError::InvalidConfig("production_rho must lie in (0, 1)".into()));
        }
        if !(self.vad_range_db.is_finite() && self.vad_range_db > 0.0) {
            return Err(SiibError::InvalidConfig("vad_range_db must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiibScore {
    pub bits_per_second: f64,
    /// Retained eigenchannels.
    pub channel_count: usize,
    pub frame_rate_hz: f64,
}

/// Information per channel when degraded equals clean.
pub fn max_bits_per_channel() -> f64 {
    -0.5 * (1.0 - PRODUCTION_RHO * PRODUCTION_RHO).log2()
}

/// Score `degraded` against the time-aligned `clean` reference.
///
/// Lengths may differ by at most one frame; the longer signal is truncated.
pub fn siib_gauss(clean: &AudioBuffer, degraded: &AudioBuffer) -> Result<SiibScore> {
    siib_gauss_with(clean, degraded, &SiibConfig::default())
}

pub fn siib_gauss_with(clean: &AudioBuffer, degraded: &AudioBuffer, config: &SiibConfig) -> Result<SiibScore> {
    SiibReference::new(clean, config)?.score(degraded)
}

/// The clean half of the metric: features, VAD mask and the KLT basis.
/// Scoring several degraded versions of one utterance against a single
/// reference skips the repeated clean analysis and eigendecomposition.
#[derive(Debug, Clone)]
pub struct SiibReference {
    clean: AudioBuffer,
    config: SiibConfig,
    frames: usize,
    keep: Vec<usize>,
    basis: DMatrix<f64>,
    /// Clean features projected onto `basis`.
    projected: DMatrix<f64>,
    frame_rate_hz: f64,
}

impl SiibReference {
    pub fn new(clean: &AudioBuffer, config: &SiibConfig) -> Result<Self> {
        config.validate()?;
        let clean = resample(clean, CANONICAL_RATE)?;
        let features = envelope_features(&clean)?;
        Self::build(clean, features, config.clone())
    }

    fn build(clean: AudioBuffer, features: EnvelopeFeatures, config: SiibConfig) -> Result<Self> {
        let frames = features.num_frames();
        let context = config.context_frames;
        let keep: Vec<usize> = active_frames(&clean.samples()[..frames * FRAME_LEN], FRAME_LEN, config.vad_range_db)
            .into_iter()
            .enumerate()
            .filter_map(|(t, k)| k.then_some(t))
            .collect();
        if keep.len() <= context + 1 {
            return Err(SiibError::AllFramesGated);
        }
        let xc = stack(&features, &keep, context);
        let basis = klt_basis(&xc);
        let projected = &xc * &basis;
        Ok(Self {
            clean,
            config,
            frames,
            keep,
            basis,
            projected,
            frame_rate_hz: features.frame_rate_hz(),
        })
    }

    /// Retained eigenchannels.
    pub fn channel_count(&self) -> usize {
        self.basis.ncols()
    }

    /// Score when the degraded signal equals the clean one.
    pub fn identity_bits_per_second(&self) -> f64 {
        let r = self.config.production_rho;
        self.frame_rate_hz * self.channel_count() as f64 * -0.5 * (1.0 - r * r).log2()
    }

    pub fn score(&self, degraded: &AudioBuffer) -> Result<SiibScore> {
        let degraded = resample(degraded, CANONICAL_RATE)?;
        let diff = self.clean.len().abs_diff(degraded.len());
        if diff > FRAME_LEN {
            return Err(SiibError::LengthMismatch(diff));
        }
        let fd = envelope_features(&degraded)?;
        if fd.num_frames() < self.frames {
            // One frame short: rebuild the reference on the common span.
            let clean = self.clean.slice(0, fd.num_frames() * FRAME_LEN);
            let features = envelope_features(&clean)?;
            return Self::build(clean, features, self.config.clone())?.score(&degraded);
        }
        let pd = stack(&fd, &self.keep, self.config.context_frames) * &self.basis;
        let rho_p = self.config.production_rho;
        let bits: f64 = (0..self.channel_count())
            .map(|i| {
                let r = rho_p * pearson(self.projected.column(i).as_slice(), pd.column(i).as_slice());
                -0.5 * (1.0 - r * r).log2()
            })
            .sum();
        Ok(SiibScore {
            bits_per_second: self.frame_rate_hz * bits,
            channel_count: self.channel_count(),
            frame_rate_hz: self.frame_rate_hz,
        })
    }
}

/// Rows are stacked vectors `[f(t - R), .., f(t)]` over the kept frames,
/// mean-removed per column.
fn stack(features: &EnvelopeFeatures, keep: &[usize], context: usize) -> DMatrix<f64> {
    let k = features.num_bands();
    let dim = k * (context + 1);
    let rows = keep.len() - context;
    let mut m = DMatrix::zeros(rows, dim);
    for r in 0..rows {
        for lag in 0..=context {
            let t = keep[r + context - lag];
            for b in 0..k {
                m[(r, lag * k + b)] = features.band(b)[t];
            }
        }
    }
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    m
}

/// Eigenvectors of the clean covariance with non-negligible variance.
fn klt_basis(xc: &DMatrix<f64>) -> DMatrix<f64> {
    let n = xc.nrows() as f64;
    let cov = xc.transpose() * xc / (n - 1.0);
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    // Rank-deficient covariances leave round-off eigenvalues that scale with
    // the largest one; those directions carry no clean signal either.
    let floor = MIN_EIGENVALUE.max(top * 1e-12);
    let kept: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > floor).collect();
    eig.eigenvectors.select_columns(&kept)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Percentage improvement of `a` over `b`.
pub fn relative_gain(a: &SiibScore, b: &SiibScore) -> Result<f64> {
    relative_gain_pct(a.bits_per_second, b.bits_per_second)
}

/// [`relative_gain`] on raw bits-per-second values.
pub fn relative_gain_pct(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 || !b.is_finite() {
        return Err(SiibError::ZeroBaseline);
    }
    Ok(100.0 * (a - b) / b)
}
