//! Mono audio buffers, WAV I/O, resampling and power measurement.

mod power;
mod resample;
mod wav;

pub use power::{measure_power, PowerMeasurement, PowerMode, FRAME_SECONDS, HOP_SECONDS};
pub use resample::resample;
pub use wav::{read_wav, write_wav, WavEncoding, WriteReport};

use std::path::PathBuf;

use thiserror::Error;

/// Pipeline-wide default working rate.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Environment variable overriding [`DEFAULT_SAMPLE_RATE`] for the CLI.
pub const SAMPLE_RATE_ENV: &str = "CLASSROOM_SIM_SAMPLE_RATE";

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("missing audio file: {0}")]
    MissingFile(PathBuf),
    #[error("unsupported WAV encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("corrupt WAV header in {path}: {detail}")]
    CorruptHeader { path: PathBuf, detail: String },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid buffer: {0}")]
    InvalidBuffer(String),
    #[error("invalid sample rate: {0} Hz")]
    InvalidRate(u32),
    #[error("empty buffer")]
    EmptyBuffer,
}

/// A mono waveform at a fixed sample rate.
///
/// Samples are nominally in ±1.0 full scale and are always finite. They are
/// stored as `f64` so that linear operations (mixing, resampling, gain) stay
/// exact to double precision; WAV float32 output stores them as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidRate(sample_rate));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidBuffer(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Returns a copy scaled by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, AudioError> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }
}

/// Number of samples covering `seconds` at `rate`, rounded to the nearest
/// sample.
pub fn seconds_to_samples(seconds: f64, rate: u32) -> usize {
    (seconds * rate as f64).round().max(0.0) as usize
}
