//! Classroom noise scenes: directive babble talkers, chair transients, an
//! ambient bed and a moving listener.

mod config;
mod path;
mod render;
mod schedule;

pub use config::{
    auto_babble_sources, load_pool, load_scene, RenderSettings, RoomSource, SceneConfig,
    SceneDescription,
};
pub use path::{listener_position, ListenerPath};
pub use render::{render_noise, RenderOutput};
pub use schedule::{
    plan_schedule, AmbientSegment, ChairEvent, EventSchedule, SourceTimeline, Utterance,
};

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError};
use crate::rir::RirError;
use crate::room::RoomError;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("unreadable pool file {path}: {source}")]
    UnreadablePoolFile {
        path: PathBuf,
        #[source]
        source: AudioError,
    },
    #[error("invalid scene: {0}")]
    InvalidConfig(String),
    #[error(
        "render of {source_seconds:.0} source-seconds exceeds the budget of {budget:.0}; \
         render shorter durations in separate runs"
    )]
    OutOfMemoryGuard { source_seconds: f64, budget: f64 },
    #[error(transparent)]
    Rir(#[from] RirError),
    #[error(transparent)]
    Room(#[from] RoomError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// A named pool recording, already at the working rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub name: String,
    pub audio: Arc<AudioBuffer>,
}

impl Clip {
    pub fn new(name: impl Into<String>, audio: AudioBuffer) -> Self {
        Self {
            name: name.into(),
            audio: Arc::new(audio),
        }
    }
}
