//! Room impulse responses: image-source early reflections plus a
//! Sabine-shaped stochastic tail.

mod images;
mod propagation;
mod rt60;
mod synth;

pub use images::{image_count, image_sources, ImageSource};
pub use propagation::{directivity_gain, occlusion_factor};
pub use rt60::estimate_rt60;
pub use synth::{synthesize_rir, RirComponents, RirEngine, TailTemplate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::room::RoomError;

/// Upper bound on reflection order; the image count grows cubically.
pub const MAX_ORDER_LIMIT: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RirError {
    #[error("source at {0:?} lies outside the room")]
    SourceOutsideRoom([f64; 3]),
    #[error("listener at {0:?} lies outside the room")]
    ListenerOutsideRoom([f64; 3]),
    #[error("degenerate segment: both endpoints at {0:?}")]
    DegenerateSegment([f64; 3]),
    #[error("direction is undefined: target coincides with the source")]
    DegenerateDirection,
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid RIR parameters: {0}")]
    InvalidParams(String),
    #[error("no decay: energy-decay slope is not negative")]
    NoDecay,
    #[error("insufficient dynamic range: decay curve never spans -5 to -25 dB")]
    InsufficientRange,
    #[error(transparent)]
    Room(#[from] RoomError),
}

/// A point source with a cardioid-family emission pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: Vec3,
    /// Unit vector along the frontal axis.
    pub orientation: Vec3,
    /// 1 = omnidirectional, 0.5 = cardioid, 0 = figure-of-eight front lobe.
    pub directivity_alpha: f64,
    #[serde(default = "unit_gain")]
    pub gain: f64,
}

fn unit_gain() -> f64 {
    1.0
}

impl SourceSpec {
    pub fn omni(position: Vec3) -> Self {
        Self {
            position,
            orientation: Vec3::new(1.0, 0.0, 0.0),
            directivity_alpha: 1.0,
            gain: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), RirError> {
        if !self.position.is_finite() {
            return Err(RirError::InvalidSource("non-finite position".into()));
        }
        if (self.orientation.norm() - 1.0).abs() > 1e-6 {
            return Err(RirError::InvalidSource(format!(
                "orientation norm {} is not 1",
                self.orientation.norm()
            )));
        }
        if !(0.0..=1.0).contains(&self.directivity_alpha) {
            return Err(RirError::InvalidSource(format!(
                "directivity_alpha {} outside [0, 1]",
                self.directivity_alpha
            )));
        }
        if !self.gain.is_finite() {
            return Err(RirError::InvalidSource("non-finite gain".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RirParams {
    pub max_order: u32,
    pub sample_rate: u32,
    pub speed_of_sound: f64,
    /// Start of the stochastic tail; `None` means `2 * sqrt(V)` ms.
    pub mixing_time_ms: Option<f64>,
    pub tail_enabled: bool,
    pub seed: u64,
    /// Fraction of scattered energy removed from each specular bounce.
    pub scattering_loss: f64,
    /// Hard cap on RIR length.
    pub max_length_s: f64,
}

impl Default for RirParams {
    fn default() -> Self {
        Self {
            max_order: 3,
            sample_rate: crate::audio::DEFAULT_SAMPLE_RATE,
            speed_of_sound: 343.0,
            mixing_time_ms: None,
            tail_enabled: true,
            seed: 0,
            scattering_loss: 0.5,
            max_length_s: 3.0,
        }
    }
}

impl RirParams {
    pub fn validate(&self) -> Result<(), RirError> {
        let bad = |m: String| Err(RirError::InvalidParams(m));
        if self.max_order > MAX_ORDER_LIMIT {
            return bad(format!(
                "max_order {} exceeds {MAX_ORDER_LIMIT}",
                self.max_order
            ));
        }
        if self.sample_rate < 8000 {
            return bad(format!(
                "sample rate {} Hz is below the 8 kHz minimum",
                self.sample_rate
            ));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return bad("speed of sound must be positive".into());
        }
        if let Some(m) = self.mixing_time_ms {
            if !(m.is_finite() && m > 0.0) {
                return bad("mixing time must be positive".into());
            }
        }
        if !(0.0..=1.0).contains(&self.scattering_loss) {
            return bad("scattering_loss must lie in [0, 1]".into());
        }
        if !(self.max_length_s.is_finite() && self.max_length_s > 0.0) {
            return bad("max_length_s must be positive".into());
        }
        Ok(())
    }

    /// Nominal mixing time in seconds for a room of `volume` m^3.
    pub fn mixing_time_s(&self, volume: f64) -> f64 {
        self.mixing_time_ms.unwrap_or(2.0 * volume.sqrt()) / 1000.0
    }
}
