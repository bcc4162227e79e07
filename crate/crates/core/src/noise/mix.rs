use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NoiseError, Result, ACTIVE_FRAME_S, ACTIVE_RANGE_DB};
use crate::audio::{active_frames, AudioBuffer};

#[derive(Debug, Clone, PartialEq)]
pub struct MixResult {
    pub mixture: AudioBuffer,
    /// The cropped noise after scaling; `mixture = speech + noise` sample by sample.
    pub noise: AudioBuffer,
    pub achieved_snr_db: f64,
    /// Always 1: speech is never rescaled.
    pub speech_scale: f64,
    pub noise_scale: f64,
    /// Where the crop starts in the supplied noise, in samples.
    pub noise_offset: usize,
}

/// Mean square over 20 ms frames within 40 dB of the loudest frame.
pub fn active_speech_power(speech: &AudioBuffer) -> f64 {
    let frame = ((ACTIVE_FRAME_S * speech.sample_rate() as f64).round() as usize).max(1);
    let x = speech.samples();
    let (mut energy, mut count) = (0.0, 0usize);
    for (chunk, keep) in x.chunks(frame).zip(active_frames(x, frame, ACTIVE_RANGE_DB)) {
        if keep {
            energy += chunk.iter().map(|s| s * s).sum::<f64>();
            count += chunk.len();
        }
    }
    if count == 0 {
        0.0
    } else {
        energy / count as f64
    }
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64
}

/// Adds noise to speech at `snr_db`, measured against the active speech level.
///
/// The noise is cropped to the speech length at an offset drawn from `seed`
/// and scaled; the speech is left untouched.
pub fn mix_at_snr(speech: &AudioBuffer, noise: &AudioBuffer, snr_db: f64, seed: u64) -> Result<MixResult> {
    if speech.sample_rate() != noise.sample_rate() {
        return Err(NoiseError::RateMismatch {
            speech: speech.sample_rate(),
            noise: noise.sample_rate(),
        });
    }
    if noise.len() < speech.len() {
        return Err(NoiseError::NoiseTooShort {
            speech: speech.len(),
            noise: noise.len(),
        });
    }
    if !snr_db.is_finite() {
        return Err(NoiseError::InvalidSnr);
    }
    let ps = active_speech_power(speech);
    if ps <= 0.0 {
        return Err(NoiseError::SilentSpeech);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0..=noise.len() - speech.len());
    let crop = &noise.samples()[offset..offset + speech.len()];
    let pn = mean_square(crop);
    if pn <= 0.0 {
        return Err(NoiseError::SilentNoise);
    }

    let scale = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled: Vec<f64> = crop.iter().map(|s| s * scale).collect();
    let achieved_snr_db = 10.0 * (ps / mean_square(&scaled)).log10();
    let mixture: Vec<f64> = speech.samples().iter().zip(&scaled).map(|(s, n)| s + n).collect();
    let rate = speech.sample_rate();
    Ok(MixResult {
        mixture: AudioBuffer::from_trusted(mixture, rate),
        noise: AudioBuffer::from_trusted(scaled, rate),
        achieved_snr_db,
        speech_scale: 1.0,
        noise_scale: scale,
        noise_offset: offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn constant(level: f64, len: usize) -> AudioBuffer {
        // Alternating sign keeps the power constant without a DC offset.
        AudioBuffer::new((0..len).map(|i| if i % 2 == 0 { level } else { -level }).collect(), 16000).unwrap()
    }

    fn gaussian(len: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new(
            (0..len).map(|_| 0.05 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn equal_power_scales() {
        let s = constant(0.1, 16000);
        let n = constant(0.1, 20000);
        let m = mix_at_snr(&s, &n, 0.0, 1).unwrap();
        assert!((m.noise_scale - 1.0).abs() < 1e-12);
        assert_eq!(m.speech_scale, 1.0);
        let m = mix_at_snr(&s, &n, -10.0, 1).unwrap();
        assert!((m.noise_scale - 10f64.powf(0.5)).abs() < 1e-12);
        assert!((m.noise_scale - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn remeasured_snr() {
        let s = gaussian(24000, 1);
        let n = gaussian(48000, 2);
        for snr in [-25.0, -10.0, 0.0, 5.0] {
            let m = mix_at_snr(&s, &n, snr, 3).unwrap();
            // Re-measure from the returned parts.
            let residual: Vec<f64> = m.mixture.samples().iter().zip(s.samples()).map(|(a, b)| a - b).collect();
            let measured = 10.0 * (active_speech_power(&s) / mean_square(&residual)).log10();
            assert!((measured - snr).abs() <= 0.01, "{measured} vs {snr}");
            assert!((m.achieved_snr_db - snr).abs() <= 1e-9);
        }
    }

    #[test]
    fn additive_and_cropped() {
        let s = gaussian(8000, 4);
        let n = gaussian(30000, 5);
        let m = mix_at_snr(&s, &n, -5.0, 6).unwrap();
        for ((mx, sp), nz) in m.mixture.samples().iter().zip(s.samples()).zip(m.noise.samples()) {
            assert_eq!(*mx, sp + nz);
        }
        for (i, v) in m.noise.samples().iter().enumerate() {
            assert_eq!(*v, n.samples()[m.noise_offset + i] * m.noise_scale);
        }
        assert_eq!(m, mix_at_snr(&s, &n, -5.0, 6).unwrap());
        assert_ne!(m.noise_offset, mix_at_snr(&s, &n, -5.0, 7).unwrap().noise_offset);
    }

    #[test]
    fn pauses_do_not_count() {
        // Half the utterance is digital silence; the active level ignores it.
        let mut x = constant(0.1, 16000).into_samples();
        x.extend(std::iter::repeat(0.0).take(16000));
        let s = AudioBuffer::new(x, 16000).unwrap();
        assert!((active_speech_power(&s) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let s = gaussian(16000, 1);
        assert!(matches!(
            mix_at_snr(&s, &gaussian(8000, 2), 0.0, 0),
            Err(NoiseError::NoiseTooShort { .. })
        ));
        let other = AudioBuffer::new(vec![0.1; 32000], 8000).unwrap();
        assert!(matches!(mix_at_snr(&s, &other, 0.0, 0), Err(NoiseError::RateMismatch { .. })));
        let silent = AudioBuffer::silence(16000, 16000).unwrap();
        assert!(matches!(mix_at_snr(&silent, &s, 0.0, 0), Err(NoiseError::SilentSpeech)));
        assert!(matches!(mix_at_snr(&s, &silent, 0.0, 0), Err(NoiseError::SilentNoise)));
        assert!(matches!(mix_at_snr(&s, &s, f64::NAN, 0), Err(NoiseError::InvalidSnr)));
        // Equal lengths leave only offset zero.
        assert_eq!(mix_at_snr(&s, &s, 0.0, 42).unwrap().noise_offset, 0);
    }
}
