//! Time-domain dynamic range compression driven by a recursively smoothed
//! envelope and an input/output envelope characteristic.

use serde::{Deserialize, Serialize};

use super::{Result, SsdrcError};
use crate::audio::{match_rms, to_db, AudioBuffer};

/// Envelope floor before conversion to dB (-120 dBFS).
const ENVELOPE_FLOOR: f64 = 1e-6;

/// Piecewise-linear map from input envelope level to output envelope level,
/// both in dBFS. Outside the given points the end segments are extended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IoecCurve {
    points: Vec<(f64, f64)>,
}

impl IoecCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(SsdrcError::InvalidCurve("need at least two points".into()));
        }
        if points.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(SsdrcError::InvalidCurve("non-finite point".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SsdrcError::InvalidCurve(format!(
                    "input levels must strictly increase ({} then {})",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(SsdrcError::InvalidCurve(format!(
                    "output levels must not decrease ({} then {})",
                    w[0].1, w[1].1
                )));
            }
        }
        Ok(Self { points })
    }

    /// Output level equals input level.
    pub fn identity() -> Self {
        Self { points: vec![(-120.0, -120.0), (0.0, 0.0)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, level_db: f64) -> f64 {
        let p = &self.points;
        let seg = match p.iter().position(|&(x, _)| x > level_db) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => p.len() - 2,
        };
        let ((x0, y0), (x1, y1)) = (p[seg], p[seg + 1]);
        y0 + (level_db - x0) * (y1 - y0) / (x1 - x0)
    }
}

impl Default for IoecCurve {
    /// Unity below -30 dBFS, 3:1 above it.
    fn default() -> Self {
        Self { points: vec![(-80.0, -80.0), (-30.0, -30.0), (0.0, -20.0)] }
    }
}

impl TryFrom<Vec<(f64, f64)>> for IoecCurve {
    type Error = SsdrcError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<IoecCurve> for Vec<(f64, f64)> {
    fn from(c: IoecCurve) -> Self {
        c.points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrcConfig {
    pub attack_ms: f64,
    pub release_ms: f64,
    pub gain_smooth_ms: f64,
    pub curve: IoecCurve,
}

impl Default for DrcConfig {
    /// Gain smoothing matches the attack: a slower gain lets onsets through
    /// uncompressed.
    fn default() -> Self {
        Self {
            attack_ms: 2.0,
            release_ms: 20.0,
            gain_smooth_ms: 2.0,
            curve: IoecCurve::default(),
        }
    }
}

impl DrcConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("attack_ms", self.attack_ms),
            ("release_ms", self.release_ms),
            ("gain_smooth_ms", self.gain_smooth_ms),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SsdrcError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One-pole coefficient for time constant `tau_ms`.
fn pole(tau_ms: f64, sample_rate: u32) -> f64 {
    (-1.0 / (tau_ms * sample_rate as f64 / 1000.0)).exp()
}

/// Per-sample non-negative envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub sample_rate: u32,
}

/// Per-sample positive linear gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTrack {
    pub values: Vec<f64>,
    pub sample_rate: u32,
}

fn follow(x: &[f64], attack: f64, release: f64, mut e: f64, out: &mut Vec<f64>) -> f64 {
    for &s in x {
        let a = s.abs();
        let alpha = if a > e { attack } else { release };
        e = alpha * e + (1.0 - alpha) * a;
        out.push(e);
    }
    e
}

/// Attack/release peak follower on `|x|`, starting from zero.
pub fn envelope_follow(buffer: &AudioBuffer, config: &DrcConfig) -> Result<Envelope> {
    config.validate()?;
    let rate = buffer.sample_rate();
    let mut values = Vec::with_capacity(buffer.len());
    follow(
        buffer.samples(),
        pole(config.attack_ms, rate),
        pole(config.release_ms, rate),
        0.0,
        &mut values,
    );
    Ok(Envelope { values, sample_rate: rate })
}

/// Like [`envelope_follow`], but the recursion starts from the state reached
/// after a pre-roll over the first five release time constants, so a signal
/// that starts at full level does not see an onset transient.
pub fn envelope_follow_primed(buffer: &AudioBuffer, config: &DrcConfig) -> Result<Envelope> {
    config.validate()?;
    let rate = buffer.sample_rate();
    let (attack, release) = (pole(config.attack_ms, rate), pole(config.release_ms, rate));
    let preroll = ((5.0 * config.release_ms * rate as f64 / 1000.0).ceil() as usize).min(buffer.len());
    let mut scratch = Vec::with_capacity(preroll);
    let start = follow(&buffer.samples()[..preroll], attack, release, 0.0, &mut scratch);
    let mut values = Vec::with_capacity(buffer.len());
    follow(buffer.samples(), attack, release, start, &mut values);
    Ok(Envelope { values, sample_rate: rate })
}

/// Compression gain `IOEC(env_dB) - env_dB`, smoothed by a one-pole
/// low-pass started at the first raw gain.
pub fn drc_gains(envelope: &Envelope, config: &DrcConfig) -> Result<GainTrack> {
    config.validate()?;
    if envelope.values.iter().any(|&e| !(e >= 0.0)) {
        return Err(SsdrcError::InvalidEnvelope);
    }
    let alpha = pole(config.gain_smooth_ms, envelope.sample_rate);
    let mut state = None;
    let values = envelope
        .values
        .iter()
        .map(|&e| {
            let level = to_db(e.max(ENVELOPE_FLOOR));
            let raw = 10f64.powf((config.curve.eval(level) - level) / 20.0);
            let s = match state {
                None => raw,
                Some(prev) => alpha * prev + (1.0 - alpha) * raw,
            };
            state = Some(s);
            s
        })
        .collect();
    Ok(GainTrack { values, sample_rate: envelope.sample_rate })
}

/// Applies the compression gains and restores the input RMS.
pub fn drc(buffer: &AudioBuffer, config: &DrcConfig) -> Result<AudioBuffer> {
    let env = envelope_follow_primed(buffer, config)?;
    let gains = drc_gains(&env, config)?;
    let mut y: Vec<f64> = buffer.samples().iter().zip(&gains.values).map(|(x, g)| x * g).collect();
    match_rms(&mut y, buffer.rms());
    Ok(AudioBuffer::new(y, buffer.sample_rate())?)
}
