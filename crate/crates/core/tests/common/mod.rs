//! Synthetic "natural" speech for integration tests.
//!
//! A source-filter talker: a glottal pulse train with a drifting, declining F0
//! drives a cascade of four time-varying formant resonators. Syllables carry
//! fricative or plosive onsets, vary in level by several dB, and words are
//! separated by pauses, so the signal has the voicing, spectral tilt and
//! dynamic range that the processing and metric respond to.

#![allow(dead_code)]

use std::f64::consts::PI;

use lucid_core::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const FS: f64 = 16000.0;

// (F1, F2, F3) for a handful of vowels, in Hz.
const VOWELS: [(f64, f64, f64); 8] = [
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (530.0, 1840.0, 2480.0),
    (660.0, 1720.0, 2410.0),
    (300.0, 870.0, 2240.0),
    (570.0, 840.0, 2410.0),
    (440.0, 1020.0, 2240.0),
    (490.0, 1350.0, 1690.0),
];

struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new() -> Self {
        Self { y1: 0.0, y2: 0.0 }
    }

    /// Two-pole resonator with unit gain at DC.
    fn step(&mut self, x: f64, f: f64, bw: f64) -> f64 {
        let r = (-PI * bw / FS).exp();
        let a1 = 2.0 * r * (2.0 * PI * f / FS).cos();
        let a2 = -r * r;
        let y = (1.0 - a1 - a2) * x + a1 * self.y1 + a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

/// One utterance of `seconds` length at 16 kHz, RMS 0.1 (-20 dBFS).
pub fn utterance(seconds: f64, seed: u64) -> AudioBuffer {
    let n = (seconds * FS) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_f0: f64 = rng.random_range(95.0..210.0);

    // Per-sample control tracks.
    let mut voiced_amp = vec![0.0; n];
    let mut noise_amp = vec![0.0; n];
    let mut noise_centre = vec![4000.0; n];
    let mut formants = vec![(500.0, 1500.0, 2500.0); n];

    let mut pos = (0.1 * FS) as usize;
    let mut prev_vowel = VOWELS[0];
    while pos < n {
        let syllables = rng.random_range(1..=3);
        for _ in 0..syllables {
            let level = 10f64.powf(rng.random_range(-9.0..3.0) / 20.0);
            // Consonant onset.
            match rng.random_range(0..3) {
                0 => {
                    let len = (rng.random_range(0.05..0.11) * FS) as usize;
                    let centre = rng.random_range(3000.0..6500.0);
                    for i in 0..len {
                        if pos + i >= n {
                            break;
                        }
                        let w = (PI * i as f64 / len as f64).sin();
                        noise_amp[pos + i] = 0.35 * level * w;
                        noise_centre[pos + i] = centre;
                    }
                    pos += len;
                }
                1 => {
                    let closure = (0.03 * FS) as usize;
                    let burst = (0.015 * FS) as usize;
                    let centre = rng.random_range(1500.0..4500.0);
                    for i in 0..burst {
                        if pos + closure + i >= n {
                            break;
                        }
                        noise_amp[pos + closure + i] = 0.6 * level * (-(i as f64) / (0.004 * FS)).exp();
                        noise_centre[pos + closure + i] = centre;
                    }
                    pos += closure + burst;
                }
                _ => {}
            }
            // Vowel with a formant glide from the previous one.
            let len = (rng.random_range(0.09..0.24) * FS) as usize;
            let v = VOWELS[rng.random_range(0..VOWELS.len())];
            for i in 0..len {
                if pos + i >= n {
                    break;
                }
                let u = i as f64 / len as f64;
                let glide = (u / 0.3).min(1.0);
                let mix = |a: f64, b: f64| a + (b - a) * glide;
                formants[pos + i] = (mix(prev_vowel.0, v.0), mix(prev_vowel.1, v.1), mix(prev_vowel.2, v.2));
                let env = (PI * u).sin().powf(0.6);
                voiced_amp[pos + i] = level * env;
            }
            prev_vowel = v;
            pos += len;
        }
        // Pause between words, occasionally long.
        let pause = if rng.random_bool(0.2) {
            rng.random_range(0.25..0.45)
        } else {
            rng.random_range(0.04..0.15)
        };
        pos += (pause * FS) as usize;
    }

    // Glottal source: pulse train, two-pole low-pass, radiation differentiator.
    let mut out = vec![0.0; n];
    let mut phase = 0.0;
    let (mut g1, mut g2, mut prev) = (0.0, 0.0, 0.0);
    let mut res = [Resonator::new(), Resonator::new(), Resonator::new(), Resonator::new()];
    let mut fric = [Resonator::new(), Resonator::new()];
    let mut hp_prev = 0.0;
    let mut drift = 0.0;
    for i in 0..n {
        let t = i as f64 / FS;
        drift = 0.999 * drift + 0.001 * gauss(&mut rng);
        let f0 = base_f0 * (1.0 + 0.12 * (2.0 * PI * 0.7 * t).sin() + 0.8 * drift) * (1.0 - 0.08 * t / seconds);
        phase += f0 / FS;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        let aspiration = 0.03 * gauss(&mut rng);
        g1 = 0.96 * g1 + pulse + aspiration;
        g2 = 0.96 * g2 + g1;
        let glottal = g2 - prev;
        prev = g2;

        let (f1, f2, f3) = formants[i];
        let mut v = glottal * voiced_amp[i];
        v = res[0].step(v, f1, 80.0);
        v = res[1].step(v, f2, 100.0);
        v = res[2].step(v, f3, 140.0);
        v = res[3].step(v, 3500.0, 250.0);

        let w = gauss(&mut rng) * noise_amp[i];
        let hp = w - hp_prev;
        hp_prev = w;
        let mut f = fric[0].step(hp, noise_centre[i], 1200.0);
        f = fric[1].step(f, noise_centre[i] * 1.1, 1800.0);

        out[i] = v + 3.0 * f;
    }

    let rms = (out.iter().map(|s| s * s).sum::<f64>() / n as f64).sqrt();
    let out: Vec<f64> = out.iter().map(|s| s * 0.1 / rms).collect();
    AudioBuffer::new(out, 16000).unwrap()
}

/// `count` utterances of 2.5-4 s with distinct seeds.
pub fn corpus(count: usize, seed: u64) -> Vec<AudioBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| utterance(rng.random_range(2.5..4.0), seed.wrapping_mul(1000).wrapping_add(i as u64)))
        .collect()
}

/// Gaussian white noise at the given RMS.
pub fn white(len: usize, rms: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rms * gauss(&mut rng)).collect()
}
