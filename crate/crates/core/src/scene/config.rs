use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, resample};
use crate::geometry::Vec3;
use crate::rir::{RirParams, SourceSpec};
use crate::room::{build_room, default_classroom_description, RoomDescription, RoomModel};
use crate::seed::stream;

use super::{Clip, ListenerPath, SceneError};

/// Render engine knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    /// Listener update interval.
    pub hop_s: f64,
    /// Equal-power crossfade between consecutive hops.
    pub crossfade_s: f64,
    /// Output peak after normalization.
    pub peak_dbfs: f64,
    /// Upper bound on `duration * sources`.
    pub max_source_seconds: f64,
    /// Output is produced in blocks of this length to bound memory.
    pub block_s: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            hop_s: 0.25,
            crossfade_s: 0.05,
            peak_dbfs: -3.0,
            max_source_seconds: 36_000.0,
            block_s: 30.0,
        }
    }
}

/// Inline room description or a path to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RoomSource {
    Path(PathBuf),
    Inline(RoomDescription),
}

/// JSON scene file. Pool entries are WAV files or directories of them,
/// relative to the scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    /// Defaults to the built-in furnished classroom.
    #[serde(default)]
    pub room: Option<RoomSource>,
    /// Explicit talkers; when absent, `babble_source_count` are placed at
    /// random seats.
    #[serde(default)]
    pub babble_sources: Option<Vec<SourceSpec>>,
    #[serde(default = "default_source_count")]
    pub babble_source_count: usize,
    #[serde(default)]
    pub babble_pool: Vec<PathBuf>,
    #[serde(default)]
    pub chair_pool: Vec<PathBuf>,
    #[serde(default = "default_chair_rate")]
    pub chair_rate_hz: f64,
    #[serde(default)]
    pub ambient_pool: Vec<PathBuf>,
    #[serde(default = "default_ambient_gain")]
    pub ambient_gain_db: f64,
    #[serde(default)]
    pub listener_path: Option<ListenerPath>,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rir: RirParams,
    #[serde(default)]
    pub render: RenderSettings,
    /// Maximum length of each output file.
    #[serde(default = "default_chunk")]
    pub chunk_s: f64,
}

fn default_source_count() -> usize {
    20
}
fn default_chair_rate() -> f64 {
    1.0 / 20.0
}
fn default_ambient_gain() -> f64 {
    -10.0
}
fn default_duration() -> f64 {
    60.0
}
fn default_chunk() -> f64 {
    600.0
}

impl Default for SceneDescription {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// A fully resolved scene, ready to schedule and render.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub room: RoomModel,
    pub babble_sources: Vec<SourceSpec>,
    pub babble_pool: Vec<Clip>,
    pub chair_pool: Vec<Clip>,
    /// Mean chair events per second.
    pub chair_rate_hz: f64,
    pub ambient_pool: Vec<Clip>,
    /// Ambient bed level relative to the RMS of the spatial mix.
    pub ambient_gain_db: f64,
    pub listener_path: ListenerPath,
    pub duration_s: f64,
    pub seed: u64,
    /// `rir_params.sample_rate` is the working rate of the render.
    pub rir_params: RirParams,
    pub render: RenderSettings,
}

impl SceneConfig {
    /// A scene with default knobs, no sources and empty pools.
    pub fn new(room: RoomModel, duration_s: f64, seed: u64) -> Self {
        let listener_path = ListenerPath::default_for(&room);
        Self {
            room,
            babble_sources: Vec::new(),
            babble_pool: Vec::new(),
            chair_pool: Vec::new(),
            chair_rate_hz: default_chair_rate(),
            ambient_pool: Vec::new(),
            ambient_gain_db: default_ambient_gain(),
            listener_path,
            duration_s,
            seed,
            rir_params: RirParams::default(),
            render: RenderSettings::default(),
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.rir_params.sample_rate
    }

    /// Output length in samples.
    pub fn output_len(&self) -> usize {
        (self.duration_s * self.sample_rate() as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::InvalidConfig(m));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s {} must be positive", self.duration_s));
        }
        if self.output_len() == 0 {
            return bad("duration is shorter than one sample".into());
        }
        if !(self.chair_rate_hz.is_finite() && self.chair_rate_hz >= 0.0) {
            return bad(format!("chair_rate_hz {} must be >= 0", self.chair_rate_hz));
        }
        if !self.ambient_gain_db.is_finite() {
            return bad("ambient_gain_db must be finite".into());
        }
        self.rir_params.validate()?;
        for (i, s) in self.babble_sources.iter().enumerate() {
            s.validate()?;
            if !self.room.contains(s.position) {
                return bad(format!(
                    "babble source {i} at {:?} lies outside the room",
                    s.position.to_array()
                ));
            }
        }
        self.listener_path.validate(&self.room)?;
        let r = &self.render;
        if !(r.hop_s > 0.0 && r.crossfade_s >= 0.0 && r.crossfade_s <= r.hop_s) {
            return bad("render hop must be positive and at least the crossfade length".into());
        }
        if !(r.block_s >= r.hop_s && r.block_s.is_finite()) {
            return bad("render block must be at least one hop".into());
        }
        if !r.peak_dbfs.is_finite() || !(r.max_source_seconds > 0.0) {
            return bad("render peak and budget must be finite and positive".into());
        }
        Ok(())
    }
}

/// Reads every WAV named by `entries` (files or directories, relative to
/// `base`) and converts it to `sample_rate`. Directory entries contribute
/// their `.wav` files in name order.
pub fn load_pool(entries: &[PathBuf], base: &Path, sample_rate: u32) -> Result<Vec<Clip>, SceneError> {
    let mut files = Vec::new();
    for e in entries {
        let p = if e.is_absolute() { e.clone() } else { base.join(e) };
        if p.is_dir() {
            let mut wavs: Vec<PathBuf> = std::fs::read_dir(&p)
                .map_err(|source| SceneError::UnreadablePoolFile {
                    path: p.clone(),
                    source: crate::audio::AudioError::IoFailure {
                        path: p.clone(),
                        source,
                    },
                })?
                .filter_map(|d| d.ok().map(|d| d.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            wavs.sort();
            files.extend(wavs);
        } else {
            files.push(p);
        }
    }
    files
        .into_iter()
        .map(|path| {
            let audio = read_wav(&path)
                .and_then(|a| resample(&a, sample_rate))
                .map_err(|source| SceneError::UnreadablePoolFile {
                    path: path.clone(),
                    source,
                })?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            Ok(Clip::new(name, audio))
        })
        .collect()
}

/// Resolves a scene description: builds the room, loads and resamples the
/// pools and places default talkers.
pub fn load_scene(
    desc: &SceneDescription,
    base: &Path,
    sample_rate: u32,
) -> Result<SceneConfig, SceneError> {
    let room_desc = match &desc.room {
        None => default_classroom_description(),
        Some(RoomSource::Inline(d)) => d.clone(),
        Some(RoomSource::Path(p)) => {
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            let text = std::fs::read_to_string(&path).map_err(|e| {
                SceneError::InvalidConfig(format!("cannot read room file {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                SceneError::InvalidConfig(format!("room file {}: {e}", path.display()))
            })?
        }
    };
    let room = build_room(&room_desc)?;
    let babble_sources = match &desc.babble_sources {
        Some(s) => s.clone(),
        None => auto_babble_sources(&room, desc.babble_source_count, desc.seed)?,
    };
    let listener_path = desc
        .listener_path
        .clone()
        .unwrap_or_else(|| ListenerPath::default_for(&room));
    let config = SceneConfig {
        babble_sources,
        babble_pool: load_pool(&desc.babble_pool, base, sample_rate)?,
        chair_pool: load_pool(&desc.chair_pool, base, sample_rate)?,
        chair_rate_hz: desc.chair_rate_hz,
        ambient_pool: load_pool(&desc.ambient_pool, base, sample_rate)?,
        ambient_gain_db: desc.ambient_gain_db,
        listener_path,
        duration_s: desc.duration_s,
        seed: desc.seed,
        rir_params: RirParams {
            sample_rate,
            ..desc.rir
        },
        render: desc.render,
        room,
    };
    config.validate()?;
    Ok(config)
}

/// Seated talkers: mouth height 1.1 m, random facing in the horizontal
/// plane, cardioid emission.
pub fn auto_babble_sources(
    room: &RoomModel,
    count: usize,
    seed: u64,
) -> Result<Vec<SourceSpec>, SceneError> {
    let mut rng = stream(seed, "placement", 0);
    let d = room.dimensions();
    let margin = |len: f64| (0.5f64).min(len / 4.0);
    let (mx, my) = (margin(d.x), margin(d.y));
    let z = 1.1f64.min(d.z / 2.0);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut placed = None;
        for _ in 0..10_000 {
            let p = Vec3::new(rng.random_range(mx..d.x - mx), rng.random_range(my..d.y - my), z);
            if room.is_free(p) {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or_else(|| {
            SceneError::InvalidConfig(format!("no free position found for babble source {i}"))
        })?;
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        out.push(SourceSpec {
            position,
            orientation: Vec3::new(angle.cos(), angle.sin(), 0.0),
            directivity_alpha: 0.5,
            gain: 1.0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::room::default_classroom;

    #[test]
    fn description_defaults() {
        let d = SceneDescription::default();
        assert_eq!(d.babble_source_count, 20);
        assert_eq!(d.chair_rate_hz, 0.05);
        assert_eq!(d.ambient_gain_db, -10.0);
        assert_eq!(d.chunk_s, 600.0);
        assert!(d.room.is_none());
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<SceneDescription>(r#"{"duraton_s": 3}"#).is_err());
    }

    #[test]
    fn auto_sources_are_free_and_deterministic() {
        let room = default_classroom();
        let a = auto_babble_sources(&room, 20, 5).unwrap();
        let b = auto_babble_sources(&room, 20, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        for s in &a {
            assert!(room.is_free(s.position));
            assert!(s.validate().is_ok());
        }
    }

    #[test]
    fn scene_without_pools_loads() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load_scene(&SceneDescription::default(), dir.path(), 16000).unwrap();
        assert_eq!(cfg.babble_sources.len(), 20);
        assert_eq!(cfg.output_len(), 960_000);
    }

    #[test]
    fn missing_pool_file_is_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let desc = SceneDescription {
            babble_pool: vec!["nope.wav".into()],
            ..SceneDescription::default()
        };
        assert!(matches!(
            load_scene(&desc, dir.path(), 16000),
            Err(SceneError::UnreadablePoolFile { .. })
        ));
    }
}
