use rand::Rng as _;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::seed::stream;

use super::{SceneConfig, SceneError};

/// Longest gap drawn between two utterances of the same talker.
pub const MAX_GAP_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    /// Index into the babble pool.
    pub clip: usize,
    pub file: String,
    pub start_sample: u64,
    pub start_s: f64,
    /// Silence preceding this utterance.
    pub gap_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTimeline {
    pub source: usize,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChairEvent {
    pub time_s: f64,
    pub start_sample: u64,
    pub position: Vec3,
    /// Index into the chair pool.
    pub clip: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientSegment {
    pub clip: usize,
    pub file: String,
    pub start_sample: u64,
    pub start_s: f64,
}

/// Everything random about a scene, drawn up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSchedule {
    pub sample_rate: u32,
    pub duration_samples: u64,
    pub babble: Vec<SourceTimeline>,
    pub chairs: Vec<ChairEvent>,
    pub ambient: Vec<AmbientSegment>,
}

/// Draws utterance timelines, chair events and the ambient tiling.
///
/// Each talker alternates a gap uniform in `[0, 2]` s with an utterance drawn
/// uniformly (with replacement) from the babble pool until the duration is
/// covered. Chair events form a Poisson process at `chair_rate_hz`, placed
/// uniformly in the furniture-free volume. The ambient bed loops one randomly
/// chosen file. Every stream is keyed by the scene seed.
pub fn plan_schedule(config: &SceneConfig) -> Result<EventSchedule, SceneError> {
    config.validate()?;
    let fs = config.sample_rate();
    let n = config.output_len() as u64;
    let to_s = |s: u64| s as f64 / fs as f64;

    if !config.babble_sources.is_empty() && config.babble_pool.is_empty() {
        return Err(SceneError::EmptyPool("babble"));
    }
    if config.chair_rate_hz > 0.0 && config.chair_pool.is_empty() {
        return Err(SceneError::EmptyPool("chair"));
    }
    if let Some(c) = config
        .babble_pool
        .iter()
        .chain(&config.chair_pool)
        .chain(&config.ambient_pool)
        .find(|c| c.audio.is_empty())
    {
        return Err(SceneError::InvalidConfig(format!("pool file {} is empty", c.name)));
    }

    let babble = (0..config.babble_sources.len())
        .map(|source| {
            let mut rng = stream(config.seed, "babble", source as u64);
            let mut utterances = Vec::new();
            let mut cursor = 0u64;
            loop {
                let gap_s = rng.random_range(0.0..=MAX_GAP_S);
                let start = cursor + (gap_s * fs as f64).round() as u64;
                if start >= n {
                    break;
                }
                let clip = rng.random_range(0..config.babble_pool.len());
                utterances.push(Utterance {
                    clip,
                    file: config.babble_pool[clip].name.clone(),
                    start_sample: start,
                    start_s: to_s(start),
                    gap_s,
                });
                cursor = start + config.babble_pool[clip].audio.len() as u64;
            }
            SourceTimeline { source, utterances }
        })
        .collect();

    let mut chairs = Vec::new();
    if config.chair_rate_hz > 0.0 {
        let mut rng = stream(config.seed, "chairs", 0);
        let exp = Exp::new(config.chair_rate_hz).expect("positive rate");
        let d = config.room.dimensions();
        let mut t = 0.0;
        loop {
            t += exp.sample(&mut rng);
            if t >= config.duration_s {
                break;
            }
            let start = ((t * fs as f64).round() as u64).min(n - 1);
            let mut position = None;
            for _ in 0..10_000 {
                let p = Vec3::new(
                    rng.random_range(0.0..d.x),
                    rng.random_range(0.0..d.y),
                    rng.random_range(0.0..d.z),
                );
                if config.room.is_free(p) {
                    position = Some(p);
                    break;
                }
            }
            let position = position.ok_or_else(|| {
                SceneError::InvalidConfig("room has no free volume for chair events".into())
            })?;
            let clip = rng.random_range(0..config.chair_pool.len());
            chairs.push(ChairEvent {
                time_s: t,
                start_sample: start,
                position,
                clip,
                file: config.chair_pool[clip].name.clone(),
            });
        }
    }

    let mut ambient = Vec::new();
    if !config.ambient_pool.is_empty() {
        let mut rng = stream(config.seed, "ambient", 0);
        let clip = rng.random_range(0..config.ambient_pool.len());
        let len = config.ambient_pool[clip].audio.len() as u64;
        let mut start = 0;
        while start < n {
            ambient.push(AmbientSegment {
                clip,
                file: config.ambient_pool[clip].name.clone(),
                start_sample: start,
                start_s: to_s(start),
            });
            start += len;
        }
    }

    Ok(EventSchedule {
        sample_rate: fs,
        duration_samples: n,
        babble,
        chairs,
        ambient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::AudioBuffer;
    use crate::rir::SourceSpec;
    use crate::room::default_classroom;
    use crate::scene::Clip;

    fn clip(name: &str, seconds: f64) -> Clip {
        let n = (seconds * 16000.0) as usize;
        Clip::new(name, AudioBuffer::new(vec![0.1; n], 16000).unwrap())
    }

    fn config(duration: f64, seed: u64) -> SceneConfig {
        let mut c = SceneConfig::new(default_classroom(), duration, seed);
        c.babble_sources = vec![
            SourceSpec::omni(Vec3::new(2.0, 2.0, 1.1)),
            SourceSpec::omni(Vec3::new(6.0, 4.0, 1.1)),
        ];
        c.babble_pool = vec![clip("a", 1.5), clip("b", 3.0)];
        c.chair_pool = vec![clip("chair", 0.3)];
        c.ambient_pool = vec![clip("hvac", 7.0)];
        c
    }

    #[test]
    fn zero_rate_means_no_chairs() {
        let mut c = config(120.0, 1);
        c.chair_rate_hz = 0.0;
        c.chair_pool.clear();
        assert!(plan_schedule(&c).unwrap().chairs.is_empty());
    }

    #[test]
    fn same_seed_same_schedule() {
        let a = serde_json::to_string(&plan_schedule(&config(60.0, 3)).unwrap()).unwrap();
        let b = serde_json::to_string(&plan_schedule(&config(60.0, 3)).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&plan_schedule(&config(60.0, 4)).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn utterances_do_not_overlap_and_cover_duration() {
        let c = config(60.0, 9);
        let s = plan_schedule(&c).unwrap();
        for tl in &s.babble {
            let mut end = 0;
            for u in &tl.utterances {
                assert!(u.start_sample >= end);
                assert!((0.0..=MAX_GAP_S).contains(&u.gap_s));
                end = u.start_sample + c.babble_pool[u.clip].audio.len() as u64;
            }
            // The last gap cannot leave more than 2 s uncovered.
            assert!(end as f64 + MAX_GAP_S * 16000.0 + 1.0 >= s.duration_samples as f64);
        }
    }

    #[test]
    fn chairs_in_free_space() {
        let c = config(600.0, 2);
        let s = plan_schedule(&c).unwrap();
        assert!(!s.chairs.is_empty());
        for e in &s.chairs {
            assert!(c.room.is_free(e.position));
            assert!(e.time_s < 600.0);
        }
    }

    #[test]
    fn ambient_tiles_duration() {
        let s = plan_schedule(&config(20.0, 2)).unwrap();
        let starts: Vec<u64> = s.ambient.iter().map(|a| a.start_sample).collect();
        assert_eq!(starts, vec![0, 112_000, 224_000]);
    }

    #[test]
    fn empty_pools_rejected() {
        let mut c = config(10.0, 1);
        c.babble_pool.clear();
        assert!(matches!(plan_schedule(&c), Err(SceneError::EmptyPool("babble"))));
        let mut c = config(10.0, 1);
        c.chair_pool.clear();
        assert!(matches!(plan_schedule(&c), Err(SceneError::EmptyPool("chair"))));
    }
}
