use std::f64::consts::PI;

use super::{AudioBuffer, AudioError, Result};

/// Zero crossings of the interpolation kernel on each side, measured at the
/// lower of the two rates.
const KERNEL_ZEROS: f64 = 32.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.94;
const KAISER_BETA: f64 = 8.6;
/// Above this many table entries the kernel is evaluated on the fly.
const MAX_TABLE: usize = 1 << 22;

/// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
///
/// The ratio is reduced to `up/down` and one kernel phase is tabulated per
/// output phase. Output length is `round(len * target / source)`.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(AudioError::InvalidSampleRate);
    }
    let source_rate = buffer.sample_rate();
    if source_rate == target_rate {
        return Ok(buffer.clone());
    }
    let g = gcd(source_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = source_rate as u64 / g;

    let len = buffer.len() as u128;
    let out_len = ((len * target_rate as u128 + source_rate as u128 / 2) / source_rate as u128) as usize;

    let cutoff = ROLLOFF * (up as f64 / down as f64).min(1.0);
    let half_width = (KERNEL_ZEROS / cutoff).ceil() as i64;
    let taps = (2 * half_width + 1) as usize;
    let kernel = Kernel { cutoff, half_width: half_width as f64 };

    let table = if (up as usize).saturating_mul(taps) <= MAX_TABLE {
        Some(build_table(&kernel, up, half_width))
    } else {
        None
    };

    let x = buffer.samples();
    let n_in = x.len() as i64;
    let mut out = Vec::with_capacity(out_len);
    let mut scratch = vec![0.0; taps];
    for k in 0..out_len as u64 {
        let num = k * down;
        let base = (num / up) as i64;
        let phase = num % up;
        let weights: &[f64] = match &table {
            Some(t) => &t[phase as usize * taps..(phase as usize + 1) * taps],
            None => {
                fill_phase(&kernel, phase as f64 / up as f64, half_width, &mut scratch);
                &scratch
            }
        };
        // tap j pairs with input index base - half_width + j
        let first = base - half_width;
        let lo = (-first).max(0) as usize;
        let hi = ((n_in - first).min(taps as i64)).max(0) as usize;
        let mut acc = 0.0;
        for j in lo..hi.max(lo) {
            acc += weights[j] * x[(first + j as i64) as usize];
        }
        out.push(acc);
    }
    Ok(AudioBuffer::from_trusted(out, target_rate))
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
}

impl Kernel {
    fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.half_width {
            return 0.0;
        }
        let u = t / self.half_width;
        let window = bessel_i0(KAISER_BETA * (1.0 - u * u).max(0.0).sqrt()) / bessel_i0(KAISER_BETA);
        self.cutoff * sinc(self.cutoff * t) * window
    }
}

/// Tap `j` of the phase with fractional offset `frac` weights input sample
/// `base - half_width + j`, i.e. sits at distance `frac + half_width - j`.
fn fill_phase(kernel: &Kernel, frac: f64, half_width: i64, out: &mut [f64]) {
    for (j, w) in out.iter_mut().enumerate() {
        *w = kernel.eval(frac + half_width as f64 - j as f64);
    }
    let sum: f64 = out.iter().sum();
    if sum != 0.0 {
        out.iter_mut().for_each(|w| *w /= sum);
    }
}

fn build_table(kernel: &Kernel, up: u64, half_width: i64) -> Vec<f64> {
    let taps = (2 * half_width + 1) as usize;
    let mut table = vec![0.0; up as usize * taps];
    for (p, row) in table.chunks_exact_mut(taps).enumerate() {
        fill_phase(kernel, p as f64 / up as f64, half_width, row);
    }
    table
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
