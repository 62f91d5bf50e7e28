//! Mono WAV input/output (PCM 16-bit or IEEE float32).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use nse_core::audio::AudioClip;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Float32,
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Parse { path: path.to_path_buf(), offset: 0, reason: other.to_string() },
    }
}

/// Reads a WAV file as a mono clip in `[-1, 1]`; multichannel input is
/// averaged across channels.
pub fn read(path: &Path) -> Result<AudioClip> {
    let mut reader = WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>(),
        SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader.samples::<i32>().map(|s| s.map(|v| v as f64 / scale)).collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| wav_error(path, e))?;
    let channels = spec.channels.max(1) as usize;
    let samples = if channels == 1 {
        interleaved
    } else {
        log::warn!("{}: averaging {channels} channels to mono", path.display());
        interleaved.chunks(channels).map(|f| f.iter().sum::<f64>() / channels as f64).collect()
    };
    Ok(AudioClip::new(spec.sample_rate, samples)?)
}

pub fn write(path: &Path, clip: &AudioClip, encoding: WavEncoding) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let spec = match encoding {
        WavEncoding::Pcm16 => WavSpec { channels: 1, sample_rate: clip.sample_rate_hz(), bits_per_sample: 16, sample_format: SampleFormat::Int },
        WavEncoding::Float32 => WavSpec { channels: 1, sample_rate: clip.sample_rate_hz(), bits_per_sample: 32, sample_format: SampleFormat::Float },
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &v in clip.samples() {
        match encoding {
            WavEncoding::Pcm16 => writer.write_sample((v * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            WavEncoding::Float32 => writer.write_sample(v as f32),
        }
        .map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}
