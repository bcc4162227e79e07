use super::stft::stft;
use super::{AudioBuffer, Result, StftConfig};

pub const MEL_BANDS: usize = 80;
const MEL_LO_HZ: f64 = 0.0;
const MEL_HI_HZ: f64 = 8000.0;
const LOG_FLOOR: f64 = 1e-5;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Range of natural-log mel energies mapped onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelRange {
    pub log_min: f64,
    pub log_max: f64,
}

impl Default for MelRange {
    fn default() -> Self {
        Self { log_min: LOG_FLOOR.ln(), log_max: 10f64.ln() }
    }
}

impl MelRange {
    /// Tightest range covering every value of the given log-mel matrices.
    pub fn fit<'a>(corpus: impl IntoIterator<Item = &'a [Vec<f64>]>) -> Option<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for frames in corpus {
            for v in frames.iter().flatten() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (hi > lo).then_some(Self { log_min: lo, log_max: hi })
    }

    fn normalize(&self, v: f64) -> f64 {
        ((v - self.log_min) / (self.log_max - self.log_min)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// `T × 80` normalised log-mel energies.
    pub frames: Vec<Vec<f64>>,
    pub config: StftConfig,
    pub mel_lo_hz: f64,
    pub mel_hi_hz: f64,
}

/// Triangular HTK-scale filters, area-normalised so that a flat spectrum
/// produces equal band energies. Rows are `MEL_BANDS` long vectors over the
/// one-sided FFT bins.
pub fn mel_filterbank(sample_rate: u32, fft_size: usize) -> Vec<Vec<f64>> {
    let bins = fft_size / 2 + 1;
    let hi = MEL_HI_HZ.min(sample_rate as f64 / 2.0);
    let (m_lo, m_hi) = (hz_to_mel(MEL_LO_HZ), hz_to_mel(hi));
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / fft_size as f64;
    (0..MEL_BANDS)
        .map(|m| {
            let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let scale = 2.0 / (right - left);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let rise = (f - left) / (centre - left);
                    let fall = (right - f) / (right - centre);
                    scale * rise.min(fall).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Natural-log mel energies (`T × 80`) of the magnitude STFT, floored at 1e-5.
pub fn log_mel_energies(buffer: &AudioBuffer, config: &StftConfig) -> Result<Vec<Vec<f64>>> {
    let spec = stft(buffer, config)?;
    let bank = mel_filterbank(buffer.sample_rate(), config.fft_size);
    // only the non-zero span of each triangle matters
    let spans: Vec<(usize, usize)> = bank
        .iter()
        .map(|row| {
            let first = row.iter().position(|&w| w > 0.0).unwrap_or(0);
            let last = row.iter().rposition(|&w| w > 0.0).map_or(0, |p| p + 1);
            (first, last.max(first))
        })
        .collect();
    Ok((0..spec.num_frames())
        .map(|t| {
            let mags = spec.magnitudes(t);
            bank.iter()
                .zip(&spans)
                .map(|(row, &(a, b))| {
                    let e: f64 = (a..b).map(|k| row[k] * mags[k]).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect()
        })
        .collect())
}

/// 80-band normalised log-mel spectrogram using the default [`MelRange`].
pub fn mel_spectrogram(buffer: &AudioBuffer, config: &StftConfig) -> Result<MelSpectrogram> {
    mel_spectrogram_with(buffer, config, MelRange::default())
}

pub fn mel_spectrogram_with(buffer: &AudioBuffer, config: &StftConfig, range: MelRange) -> Result<MelSpectrogram> {
    let raw = log_mel_energies(buffer, config)?;
    Ok(MelSpectrogram {
        frames: raw
            .into_iter()
            .map(|f| f.into_iter().map(|v| range.normalize(v)).collect())
            .collect(),
        config: *config,
        mel_lo_hz: MEL_LO_HZ,
        mel_hi_hz: MEL_HI_HZ.min(buffer.sample_rate() as f64 / 2.0),
    })
}
