use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::lpc::{all_pole_filter, autocorrelation, levinson};
use super::{NoiseError, Result, ACTIVE_FRAME_S, ACTIVE_RANGE_DB, NOISE_LEVEL_DBFS};
use crate::audio::{active_frames, from_db, load_wav, match_rms, resample, AudioBuffer, CANONICAL_RATE};

pub const LPC_ORDER: usize = 20;

const MIN_REFERENCE_S: f64 = 3.0;
// Discarded filter output so the all-pole recursion starts in steady state.
const WARM_UP_S: f64 = 0.5;

/// Speech-shaped noise at the canonical rate.
///
/// The reference buffers are resampled to the canonical rate, reduced to their
/// active frames and concatenated; an order-20 autocorrelation LPC fit of that
/// signal colours seeded white Gaussian noise. The output is at -26 dBFS RMS.
pub fn ssn_generate(reference: &[AudioBuffer], duration_s: f64, seed: u64) -> Result<AudioBuffer> {
    let total: f64 = reference.iter().map(AudioBuffer::duration_seconds).sum();
    if total < MIN_REFERENCE_S {
        return Err(NoiseError::ReferenceTooShort(total));
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(NoiseError::ZeroDuration);
    }
    let len = (duration_s * CANONICAL_RATE as f64).round() as usize;
    if len == 0 {
        return Err(NoiseError::ZeroDuration);
    }

    let speech = active_concatenation(reference)?;
    let mut r = autocorrelation(&speech, LPC_ORDER);
    // A tiny white-noise floor keeps the normal equations well conditioned.
    r[0] *= 1.0 + 1e-9;
    let (a, _) = levinson(&r).ok_or(NoiseError::DegenerateReference)?;

    let warm_up = (WARM_UP_S * CANONICAL_RATE as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let excitation: Vec<f64> = (0..warm_up + len)
        .map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let mut noise = all_pole_filter(&a, &excitation).split_off(warm_up);
    match_rms(&mut noise, from_db(NOISE_LEVEL_DBFS));
    Ok(AudioBuffer::new(noise, CANONICAL_RATE)?)
}

fn active_concatenation(reference: &[AudioBuffer]) -> Result<Vec<f64>> {
    let frame = (ACTIVE_FRAME_S * CANONICAL_RATE as f64).round() as usize;
    let mut out = Vec::new();
    for buffer in reference {
        let b = resample(buffer, CANONICAL_RATE)?;
        let active = active_frames(b.samples(), frame, ACTIVE_RANGE_DB);
        for (chunk, keep) in b.samples().chunks(frame).zip(active) {
            if keep {
                out.extend_from_slice(chunk);
            }
        }
    }
    if out.is_empty() {
        return Err(NoiseError::DegenerateReference);
    }
    Ok(out)
}

/// Competing-speaker noise read from a WAV file.
pub fn csn_load(path: impl AsRef<Path>, duration_s: f64, offset_s: f64) -> Result<AudioBuffer> {
    let recording = load_wav(path)?;
    csn_from_buffer(&recording, duration_s, offset_s)
}

/// Cuts `[offset_s, offset_s + duration_s)` out of a talker recording,
/// resamples it to the canonical rate and normalises it to -26 dBFS.
pub fn csn_from_buffer(recording: &AudioBuffer, duration_s: f64, offset_s: f64) -> Result<AudioBuffer> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(NoiseError::ZeroDuration);
    }
    let rate = recording.sample_rate() as f64;
    let out_of_range = || NoiseError::SegmentOutOfRange {
        offset_s,
        end_s: offset_s + duration_s,
        available_s: recording.duration_seconds(),
    };
    if !(offset_s.is_finite() && offset_s >= 0.0) {
        return Err(out_of_range());
    }
    let start = (offset_s * rate).round() as usize;
    let len = (duration_s * rate).round() as usize;
    if len == 0 {
        return Err(NoiseError::ZeroDuration);
    }
    if start + len > recording.len() {
        return Err(out_of_range());
    }
    let segment = resample(&recording.slice(start, len), CANONICAL_RATE)?;
    if segment.rms() <= 0.0 {
        return Err(NoiseError::SilentNoise);
    }
    let mut samples = segment.into_samples();
    match_rms(&mut samples, from_db(NOISE_LEVEL_DBFS));
    Ok(AudioBuffer::new(samples, CANONICAL_RATE)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{save_wav, to_db};
    use rustfft::{num_complex::Complex, FftPlanner};

    /// Voiced "speech": a jittered glottal pulse train through three
    /// formant resonators, gated into syllables with pauses.
    fn pseudo_speech(seconds: f64, seed: u64) -> AudioBuffer {
        use rand::Rng;
        let fs = 16000.0;
        let n = (seconds * fs) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut src = vec![0.0; n];
        let mut next = 0.0;
        let mut f0: f64 = 120.0;
        while (next as usize) < n {
            src[next as usize] = 1.0;
            f0 = (f0 + rng.random_range(-10.0..10.0)).clamp(80.0, 220.0);
            next += fs / f0;
        }
        for s in src.iter_mut() {
            *s += 0.02 * Distribution::<f64>::sample(&StandardNormal, &mut rng);
        }
        let mut y = src;
        for (fc, bw) in [(500.0, 80.0), (1500.0, 120.0), (2500.0, 160.0)] {
            let r: f64 = (-std::f64::consts::PI * bw / fs).exp();
            let th = 2.0 * std::f64::consts::PI * fc / fs;
            let a = [1.0, -2.0 * r * th.cos(), r * r];
            let filtered = all_pole_filter(&a, &y);
            y = y.iter().zip(&filtered).map(|(d, f)| 0.3 * d + f).collect();
        }
        let syllable = (0.25 * fs) as usize;
        for (i, s) in y.iter_mut().enumerate() {
            let pos = i % syllable;
            let gate = if (i / syllable) % 4 == 3 {
                0.0
            } else {
                (std::f64::consts::PI * pos as f64 / syllable as f64).sin()
            };
            *s *= gate;
        }
        let mut y = y;
        match_rms(&mut y, 0.1);
        AudioBuffer::new(y, 16000).unwrap()
    }

    /// Welch PSD (Hann, 1024 points, 50% overlap) summed into third-octave
    /// bands; returns levels in dB.
    fn band_levels(x: &[f64], centres: &[f64]) -> Vec<f64> {
        let n = 1024;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let w: Vec<f64> = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let mut psd = vec![0.0; n / 2 + 1];
        let mut start = 0;
        while start + n <= x.len() {
            let mut buf: Vec<Complex<f64>> = (0..n).map(|i| Complex::new(x[start + i] * w[i], 0.0)).collect();
            fft.process(&mut buf);
            for (p, c) in psd.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
            start += n / 2;
        }
        centres
            .iter()
            .map(|&fc| {
                let (lo, hi) = (fc * 2f64.powf(-1.0 / 6.0), fc * 2f64.powf(1.0 / 6.0));
                let e: f64 = psd
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| {
                        let f = *k as f64 * 16000.0 / n as f64;
                        f >= lo && f < hi
                    })
                    .map(|(_, p)| p)
                    .sum();
                10.0 * e.log10()
            })
            .collect()
    }

    fn centres(lo: f64, hi: f64) -> Vec<f64> {
        (-10..=10)
            .map(|i| 1000.0 * 2f64.powf(i as f64 / 3.0))
            .filter(|&f| f >= lo * 0.99 && f <= hi * 1.01)
            .collect()
    }

    fn active_only(b: &AudioBuffer) -> Vec<f64> {
        active_concatenation(std::slice::from_ref(b)).unwrap()
    }

    #[test]
    fn spectrum_follows_reference() {
        let reference = pseudo_speech(8.0, 1);
        let noise = ssn_generate(std::slice::from_ref(&reference), 20.0, 7).unwrap();
        assert_eq!(noise.len(), 320_000);
        assert!((to_db(noise.rms()) - NOISE_LEVEL_DBFS).abs() < 1e-9);

        let c = centres(100.0, 7000.0);
        let speech = band_levels(&active_only(&reference), &c);
        let ssn = band_levels(noise.samples(), &c);
        let diff: Vec<f64> = speech.iter().zip(&ssn).map(|(a, b)| b - a).collect();
        let offset = diff.iter().sum::<f64>() / diff.len() as f64;
        for (fc, d) in c.iter().zip(&diff) {
            assert!((d - offset).abs() <= 3.0, "{fc} Hz: {:.2} dB", d - offset);
        }
    }

    #[test]
    fn seeded_and_reproducible() {
        let reference = pseudo_speech(4.0, 2);
        let refs = std::slice::from_ref(&reference);
        let a = ssn_generate(refs, 2.0, 11).unwrap();
        assert_eq!(a, ssn_generate(refs, 2.0, 11).unwrap());
        let b = ssn_generate(refs, 2.0, 12).unwrap();
        assert_ne!(a.samples(), b.samples());
    }

    #[test]
    fn different_seeds_share_spectrum() {
        let reference = pseudo_speech(6.0, 3);
        let refs = std::slice::from_ref(&reference);
        let a = ssn_generate(refs, 30.0, 1).unwrap();
        let b = ssn_generate(refs, 30.0, 2).unwrap();
        let c = centres(200.0, 7000.0);
        for ((fc, la), lb) in c.iter().zip(band_levels(a.samples(), &c)).zip(band_levels(b.samples(), &c)) {
            assert!((la - lb).abs() <= 1.0, "{fc} Hz: {la:.2} vs {lb:.2}");
        }
    }

    #[test]
    fn stationary_over_one_second_windows() {
        let reference = pseudo_speech(6.0, 4);
        let noise = ssn_generate(std::slice::from_ref(&reference), 6.0, 5).unwrap();
        // Octave bands so each band holds enough bins for a stable 1 s estimate.
        let c: Vec<f64> = [250.0, 500.0, 1000.0, 2000.0, 4000.0].to_vec();
        let windows: Vec<Vec<f64>> = noise.samples().chunks(16000).map(|w| octave_levels(w, &c)).collect();
        for i in 0..windows.len() {
            for j in i + 1..windows.len() {
                for (k, fc) in c.iter().enumerate() {
                    let d = windows[i][k] - windows[j][k];
                    assert!(d.abs() <= 2.0, "windows {i},{j} at {fc} Hz differ by {d:.2} dB");
                }
            }
        }
    }

    fn octave_levels(x: &[f64], centres: &[f64]) -> Vec<f64> {
        // Octave = three adjacent third-octave bands summed in power.
        centres
            .iter()
            .map(|&fc| {
                let thirds = [fc * 2f64.powf(-1.0 / 3.0), fc, fc * 2f64.powf(1.0 / 3.0)];
                let p: f64 = band_levels(x, &thirds).iter().map(|l| 10f64.powf(l / 10.0)).sum();
                10.0 * p.log10()
            })
            .collect()
    }

    #[test]
    fn reference_and_duration_checks() {
        let short = pseudo_speech(2.0, 6);
        assert!(matches!(
            ssn_generate(std::slice::from_ref(&short), 1.0, 0),
            Err(NoiseError::ReferenceTooShort(_))
        ));
        // Two short buffers add up to enough reference material.
        let pair = [short.clone(), pseudo_speech(1.5, 7)];
        assert!(ssn_generate(&pair, 1.0, 0).is_ok());
        assert!(matches!(ssn_generate(&pair, 0.0, 0), Err(NoiseError::ZeroDuration)));
        let silent = AudioBuffer::silence(64000, 16000).unwrap();
        assert!(matches!(
            ssn_generate(&[silent], 1.0, 0),
            Err(NoiseError::DegenerateReference)
        ));
    }

    #[test]
    fn reference_at_other_rate() {
        let reference = resample(&pseudo_speech(4.0, 8), 48000).unwrap();
        let noise = ssn_generate(&[reference], 1.0, 3).unwrap();
        assert_eq!(noise.sample_rate(), CANONICAL_RATE);
        assert_eq!(noise.len(), 16000);
    }

    #[test]
    fn csn_segment() {
        let talker = resample(&pseudo_speech(5.0, 9), 22050).unwrap();
        let seg = csn_from_buffer(&talker, 2.0, 1.0).unwrap();
        assert_eq!(seg.sample_rate(), CANONICAL_RATE);
        assert_eq!(seg.len(), 32000);
        assert!((to_db(seg.rms()) - NOISE_LEVEL_DBFS).abs() < 1e-9);
        assert!(matches!(
            csn_from_buffer(&talker, 2.0, 3.5),
            Err(NoiseError::SegmentOutOfRange { .. })
        ));
        assert!(csn_from_buffer(&talker, 2.0, 3.0).is_ok());
        assert!(csn_from_buffer(&talker, 1.0, -1.0).is_err());
        assert!(matches!(csn_from_buffer(&talker, 0.0, 0.0), Err(NoiseError::ZeroDuration)));
    }

    #[test]
    fn csn_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("talker.wav");
        save_wav(&pseudo_speech(3.0, 10), &path).unwrap();
        let seg = csn_load(&path, 1.0, 0.5).unwrap();
        assert_eq!(seg.len(), 16000);
        assert!(matches!(
            csn_load(dir.path().join("missing.wav"), 1.0, 0.0),
            Err(NoiseError::Audio(_))
        ));
    }
}
