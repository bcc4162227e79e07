//! Two-stage, noise-independent intelligibility modification: spectral
//! shaping followed by dynamic range compression.
//!
//! Each stage restores the utterance RMS of its input, so the whole chain is
//! level-neutral and any intelligibility change comes from how energy is
//! redistributed over time and frequency. A final limiter keeps the output
//! inside `[-1, 1]`.

mod drc;
mod shaping;
mod voicing;

pub use drc::{
    drc, drc_gains, envelope_follow, envelope_follow_primed, DrcConfig, Envelope, GainTrack, IoecCurve,
};
pub use shaping::{
    adaptive_sharpening_gains, apply_gains, hf_boost_gains, pre_emphasis_db, pre_emphasis_gains, shaping_gains,
    spectral_shaping, ShapingConfig, ShapingGains,
};
pub use voicing::{voicing_probability, VoicingTrack};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError};

pub type Result<T> = std::result::Result<T, SsdrcError>;

#[derive(Error, Debug)]
pub enum SsdrcError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid IOEC curve: {0}")]
    InvalidCurve(String),
    #[error("envelope must be non-negative")]
    InvalidEnvelope,
    #[error("sample rate {0} Hz is below the 8 kHz minimum")]
    SampleRateTooLow(u32),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsdrcConfig {
    pub shaping: ShapingConfig,
    pub drc: DrcConfig,
}

impl SsdrcConfig {
    pub fn validate(&self) -> Result<()> {
        self.shaping.validate()?;
        self.drc.validate()
    }
}

/// Spectral shaping then compression, without the output limiter. The
/// result has the input's RMS.
pub fn ssdrc_unlimited(buffer: &AudioBuffer, config: &SsdrcConfig) -> Result<AudioBuffer> {
    let shaped = spectral_shaping(buffer, &config.shaping)?;
    drc(&shaped, &config.drc)
}

/// Full modification chain. If the level-matched output peaks above full
/// scale it is normalised to a unit peak, then hard-clamped to `[-1, 1]`.
pub fn ssdrc(buffer: &AudioBuffer, config: &SsdrcConfig) -> Result<AudioBuffer> {
    Ok(limit(ssdrc_unlimited(buffer, config)?))
}

fn limit(buffer: AudioBuffer) -> AudioBuffer {
    let peak = buffer.peak();
    let rate = buffer.sample_rate();
    let gain = if peak > 1.0 { 1.0 / peak } else { 1.0 };
    let samples = buffer
        .into_samples()
        .into_iter()
        .map(|s| (s * gain).clamp(-1.0, 1.0))
        .collect();
    AudioBuffer::from_trusted(samples, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::to_db;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn silence_stays_silent() {
        let b = AudioBuffer::silence(16000, 16000).unwrap();
        assert_eq!(ssdrc(&b, &SsdrcConfig::default()).unwrap(), b);
    }

    #[test]
    fn limiter_keeps_full_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..16000).map(|_| 0.6 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let b = AudioBuffer::new(x, 16000).unwrap();
        let y = ssdrc(&b, &SsdrcConfig::default()).unwrap();
        assert!(y.peak() <= 1.0);
        assert_eq!(y.len(), b.len());
        let pre = ssdrc_unlimited(&b, &SsdrcConfig::default()).unwrap();
        assert!(to_db(pre.rms() / b.rms()).abs() < 0.01);
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x: Vec<f64> = (0..9000).map(|_| 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let b = AudioBuffer::new(x, 16000).unwrap();
        let c = SsdrcConfig::default();
        assert_eq!(ssdrc(&b, &c).unwrap(), ssdrc(&b, &c).unwrap());
    }

    #[test]
    fn config_from_toml() {
        let c: SsdrcConfig = toml::from_str(
            r#"
            [shaping]
            beta = 0.5
            [drc]
            release_ms = 40.0
            curve = [[-90.0, -90.0], [-20.0, -20.0], [0.0, -10.0]]
            "#,
        )
        .unwrap();
        assert_eq!(c.shaping.beta, 0.5);
        assert_eq!(c.shaping.clip_high_db, 21.0);
        assert_eq!(c.drc.release_ms, 40.0);
        assert_eq!(c.drc.attack_ms, 2.0);
        assert_eq!(c.drc.curve.eval(-10.0), -15.0);
        let bad = toml::from_str::<SsdrcConfig>("[drc]\ncurve = [[0.0, 0.0], [-10.0, 5.0]]");
        assert!(bad.is_err());
    }
}
