use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioBuffer, AudioError, Result};

/// Reads a PCM16 or float32 WAV file, averaging channels down to mono.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::FileNotFound(path.to_path_buf()));
    }
    let reader = WavReader::open(path).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedCodec(format!("{channels} channels")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedCodec(format!("{fmt:?} {bits}-bit")));
        }
    };
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Writes a mono float32 WAV. Samples are narrowed to `f32`.
pub fn save_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    if buffer.is_empty() {
        return Err(AudioError::Empty);
    }
    if buffer.samples().iter().any(|s| !s.is_finite()) {
        return Err(AudioError::NonFinite);
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(map_hound)?;
    for &s in buffer.samples() {
        writer.write_sample(s as f32).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

fn map_hound(e: hound::Error) -> AudioError {
    match e {
        hound::Error::IoError(io) => AudioError::Io(io),
        hound::Error::FormatError(msg) => AudioError::MalformedWav(msg.to_string()),
        hound::Error::Unsupported => AudioError::UnsupportedCodec("unsupported WAV format".into()),
        other => AudioError::MalformedWav(other.to_string()),
    }
}
