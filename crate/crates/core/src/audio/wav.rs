use std::path::Path;

use hound::{SampleFormat, WavSpec};
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, AudioError};

const PCM16_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Outcome of [`write_wav`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteReport {
    /// Samples saturated at full scale (pcm16 only).
    pub clipped: usize,
}

/// Reads a PCM16 or float32 WAV file, averaging channels down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(AudioError::MissingFile(path.to_path_buf()));
    }
    let mut reader = hound::WavReader::open(path).map_err(|e| map_read_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(AudioError::CorruptHeader {
            path: path.to_path_buf(),
            detail: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{format:?} {bits}-bit"),
            })
        }
    }
    .map_err(|e| map_read_error(path, e))?;

    if interleaved.len() % channels != 0 {
        return Err(AudioError::CorruptHeader {
            path: path.to_path_buf(),
            detail: "truncated frame".into(),
        });
    }
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    AudioBuffer::new(samples, spec.sample_rate).map_err(|e| match e {
        AudioError::InvalidRate(_) => AudioError::CorruptHeader {
            path: path.to_path_buf(),
            detail: "zero sample rate".into(),
        },
        other => other,
    })
}

fn map_read_error(path: &Path, err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(source) => AudioError::IoFailure {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "format tag not PCM or IEEE float".into(),
        },
        other => AudioError::CorruptHeader {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Writes a mono WAV file, creating parent directories.
///
/// pcm16 output saturates samples beyond ±1.0 and counts them in the report.
pub fn write_wav(
    buffer: &AudioBuffer,
    path: impl AsRef<Path>,
    encoding: WavEncoding,
) -> Result<WriteReport, AudioError> {
    let path = path.as_ref();
    if buffer.samples().iter().any(|s| !s.is_finite()) {
        return Err(AudioError::InvalidBuffer("non-finite sample".into()));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let io_err = |e: hound::Error| AudioError::IoFailure {
        path: path.to_path_buf(),
        source: match e {
            hound::Error::IoError(io) => io,
            other => std::io::Error::other(other.to_string()),
        },
    };

    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(hound::Error::IoError(e)))?;
    }
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    let mut report = WriteReport::default();
    match encoding {
        WavEncoding::Pcm16 => {
            for &s in buffer.samples() {
                if s.abs() > 1.0 {
                    report.clipped += 1;
                }
                let q = (s * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(io_err)?;
            }
        }
        WavEncoding::Float32 => {
            for &s in buffer.samples() {
                writer.write_sample(s as f32).map_err(io_err)?;
            }
        }
    }
    writer.finalize().map_err(io_err)?;
    Ok(report)
}
