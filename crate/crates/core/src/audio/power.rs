use serde::{Deserialize, Serialize};

use super::{AudioBuffer, AudioError};

pub const FRAME_SECONDS: f64 = 0.025;
pub const HOP_SECONDS: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    /// Mean square over every sample.
    Full,
    /// Mean square over frames passing an energy gate.
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMeasurement {
    /// Mean-square power relative to full scale.
    pub power: f64,
    /// Set when `Active` found no frame above the gate and fell back to
    /// full-buffer power.
    pub fallback: bool,
    pub active_frames: usize,
    pub total_frames: usize,
}

impl PowerMeasurement {
    pub fn db(&self) -> f64 {
        10.0 * self.power.log10()
    }
}

/// Mean-square power of a buffer.
///
/// In `Active` mode the buffer is cut into 25 ms frames with a 10 ms hop and
/// the result is the mean square over the samples covered by frames whose
/// RMS exceeds `vad_threshold_db` (dBFS). Buffers shorter than one frame are
/// treated as a single frame.
pub fn measure_power(
    buffer: &AudioBuffer,
    mode: PowerMode,
    vad_threshold_db: f64,
) -> Result<PowerMeasurement, AudioError> {
    if buffer.is_empty() {
        return Err(AudioError::EmptyBuffer);
    }
    let samples = buffer.samples();
    let full = samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64;
    if mode == PowerMode::Full {
        return Ok(PowerMeasurement {
            power: full,
            fallback: false,
            active_frames: 0,
            total_frames: 0,
        });
    }

    let rate = buffer.sample_rate() as f64;
    let frame = ((FRAME_SECONDS * rate).round() as usize).max(1);
    let hop = ((HOP_SECONDS * rate).round() as usize).max(1);
    let gate = 10f64.powf(vad_threshold_db / 10.0);

    // Frame starts on the hop grid, plus one frame flush with the end so
    // every sample is covered.
    let mut starts: Vec<usize> = if samples.len() < frame {
        vec![0]
    } else {
        (0..=samples.len() - frame).step_by(hop).collect()
    };
    if let Some(&last) = starts.last() {
        if samples.len() >= frame && last + frame < samples.len() {
            starts.push(samples.len() - frame);
        }
    }
    let frame_len = frame.min(samples.len());

    let mut active = vec![false; samples.len()];
    let mut active_frames = 0;
    for &start in &starts {
        let chunk = &samples[start..start + frame_len];
        let ms = chunk.iter().map(|s| s * s).sum::<f64>() / chunk.len() as f64;
        // RMS above the threshold <=> mean square above it in power dB.
        if ms > gate {
            active_frames += 1;
            active[start..start + frame_len].fill(true);
        }
    }
    let total_frames = starts.len();

    if active_frames == 0 {
        return Ok(PowerMeasurement {
            power: full,
            fallback: true,
            active_frames,
            total_frames,
        });
    }
    let (sum, count) = samples
        .iter()
        .zip(&active)
        .filter(|(_, &a)| a)
        .fold((0.0, 0usize), |(s, c), (x, _)| (s + x * x, c + 1));
    Ok(PowerMeasurement {
        power: sum / count as f64,
        fallback: false,
        active_frames,
        total_frames,
    })
}
