use serde::{Deserialize, Serialize};

use crate::audio::{measure_power, AudioBuffer, PowerMode};

use super::CorpusError;

/// Activity gate for speech power, dBFS.
pub const VAD_THRESHOLD_DB: f64 = -40.0;
/// Speech below this level with no active frame counts as silent.
const SILENT_SPEECH_POWER: f64 = 1e-6;

/// Power definitions on each side of the SNR ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnrPowerModes {
    pub speech: PowerMode,
    pub noise: PowerMode,
}

impl Default for SnrPowerModes {
    fn default() -> Self {
        Self {
            speech: PowerMode::Active,
            noise: PowerMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixResult {
    pub audio: AudioBuffer,
    pub gain: f64,
    /// Samples beyond ±1.0 full scale.
    pub clipped: usize,
    pub measured_snr_db: f64,
}

/// `len` samples of `noise` starting at `offset` samples, looping as needed.
pub fn noise_segment(noise: &AudioBuffer, offset: usize, len: usize) -> Result<AudioBuffer, CorpusError> {
    if noise.is_empty() {
        return Err(CorpusError::SilentNoise);
    }
    let src = noise.samples();
    let start = offset % src.len();
    let samples = (0..len).map(|i| src[(start + i) % src.len()]).collect();
    Ok(AudioBuffer::new(samples, noise.sample_rate())?)
}

/// Adds noise to speech at a target SNR.
///
/// The noise is read from `noise_offset_s`, looped to the speech length and
/// scaled by `g = sqrt(P_speech / (P_noise * 10^(snr / 10)))`, with speech
/// power over frames above -40 dBFS and noise power over the whole segment
/// by default.
pub fn mix_at_snr(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    target_snr_db: f64,
    noise_offset_s: f64,
    modes: SnrPowerModes,
) -> Result<MixResult, CorpusError> {
    if speech.sample_rate() != noise.sample_rate() {
        return Err(CorpusError::Invalid(format!(
            "speech at {} Hz, noise at {} Hz",
            speech.sample_rate(),
            noise.sample_rate()
        )));
    }
    if !target_snr_db.is_finite() || !(noise_offset_s >= 0.0) {
        return Err(CorpusError::Invalid("SNR must be finite and offset >= 0".into()));
    }
    let offset = (noise_offset_s * noise.sample_rate() as f64).round() as usize;
    let segment = noise_segment(noise, offset, speech.len())?;
    let (gain, measured_snr_db) = snr_gain(speech, &segment, target_snr_db, modes)?;
    let samples: Vec<f64> = speech
        .samples()
        .iter()
        .zip(segment.samples())
        .map(|(s, n)| s + gain * n)
        .collect();
    let clipped = samples.iter().filter(|v| v.abs() > 1.0).count();
    Ok(MixResult {
        audio: AudioBuffer::new(samples, speech.sample_rate())?,
        gain,
        clipped,
        measured_snr_db,
    })
}

/// Noise gain for the target SNR and the SNR of the scaled segment measured
/// with the same power definitions.
fn snr_gain(
    speech: &AudioBuffer,
    segment: &AudioBuffer,
    target_snr_db: f64,
    modes: SnrPowerModes,
) -> Result<(f64, f64), CorpusError> {
    let ps = measure_power(speech, modes.speech, VAD_THRESHOLD_DB)?;
    if ps.power == 0.0 || (ps.fallback && ps.power < SILENT_SPEECH_POWER) {
        return Err(CorpusError::SilentSpeech);
    }
    let pn = measure_power(segment, modes.noise, VAD_THRESHOLD_DB)?;
    if pn.power == 0.0 {
        return Err(CorpusError::SilentNoise);
    }
    let gain = (ps.power / (pn.power * 10f64.powf(target_snr_db / 10.0))).sqrt();
    let scaled = segment.scaled(gain)?;
    let pm = measure_power(&scaled, modes.noise, VAD_THRESHOLD_DB)?;
    Ok((gain, 10.0 * (ps.power / pm.power).log10()))
}

/// SNR of `noisy - clean` against `clean` under the given power modes.
pub(crate) fn measured_snr(
    clean: &AudioBuffer,
    noisy: &AudioBuffer,
    modes: SnrPowerModes,
) -> Result<f64, CorpusError> {
    if clean.len() != noisy.len() {
        return Err(CorpusError::Invalid("clean and noisy lengths differ".into()));
    }
    let residual: Vec<f64> = noisy
        .samples()
        .iter()
        .zip(clean.samples())
        .map(|(y, s)| y - s)
        .collect();
    let ps = measure_power(clean, modes.speech, VAD_THRESHOLD_DB)?;
    let pn = measure_power(
        &AudioBuffer::new(residual, clean.sample_rate())?,
        modes.noise,
        VAD_THRESHOLD_DB,
    )?;
    if pn.power == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps.power / pn.power).log10())
}
