//! Deterministic synthetic audio so the whole pipeline runs without
//! licensed recordings.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{write_wav, AudioBuffer, AudioError, WavEncoding};
use crate::corpus::{write_jsonl, CorpusError, MixManifest, Role, UtteranceRecord};
use crate::seed::{derive_seed, rng, stream};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture spec: {0}")]
    InvalidSpec(String),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Tone,
    Chirp,
    NoiseBurst,
    SyntheticBabbleVoice,
    ImpulseTrain,
    Silence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    pub duration_s: f64,
    /// Tone frequency, chirp start, impulse rate or voice pitch.
    #[serde(default)]
    pub fundamental_hz: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Peak level.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    0.5
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind, duration_s: f64) -> Self {
        Self {
            kind,
            duration_s,
            fundamental_hz: None,
            seed: 0,
            amplitude: default_amplitude(),
        }
    }

    pub fn with_fundamental(mut self, hz: f64) -> Self {
        self.fundamental_hz = Some(hz);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Pitch range accepted for synthetic voices.
pub const VOICE_PITCH_HZ: (f64, f64) = (60.0, 500.0);
pub const CHILD_PITCH_HZ: (f64, f64) = (250.0, 400.0);
pub const ADULT_PITCH_HZ: (f64, f64) = (85.0, 180.0);
/// Syllable rate of the voice envelope.
const SYLLABLE_HZ: f64 = 4.0;
/// Largest relative pitch offset of a syllable target.
const PITCH_GLIDE: f64 = 0.04;
/// Standard deviation of the per-sample relative pitch jitter.
const PITCH_JITTER: f64 = 0.002;
/// Corpus voices sit this factor inside their band so glide and jitter
/// never leave it.
const BAND_MARGIN: f64 = 1.05;

/// Renders a fixture. Output length is `round(duration_s * sample_rate)`.
pub fn generate_fixture(spec: &FixtureSpec, sample_rate: u32) -> Result<AudioBuffer, FixtureError> {
    let bad = |m: String| Err(FixtureError::InvalidSpec(m));
    if !(spec.duration_s > 0.0 && spec.duration_s.is_finite()) {
        return bad(format!("duration {} s", spec.duration_s));
    }
    if !(spec.amplitude.is_finite() && spec.amplitude >= 0.0) {
        return bad(format!("amplitude {}", spec.amplitude));
    }
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    let n = (spec.duration_s * fs).round() as usize;
    if n == 0 {
        return bad(format!("{} s is shorter than one sample", spec.duration_s));
    }
    let f0 = spec.fundamental_hz;
    let need_f = |default: f64, lo: f64, hi: f64| -> Result<f64, FixtureError> {
        let f = f0.unwrap_or(default);
        if f.is_finite() && f >= lo && f <= hi {
            Ok(f)
        } else {
            Err(FixtureError::InvalidSpec(format!(
                "{:?} needs a frequency in [{lo}, {hi}] Hz, got {f}",
                spec.kind
            )))
        }
    };
    let a = spec.amplitude;
    let mut r = rng(spec.seed);
    let samples: Vec<f64> = match spec.kind {
        FixtureKind::Silence => vec![0.0; n],
        FixtureKind::Tone => {
            let f = need_f(440.0, f64::MIN_POSITIVE, nyquist)?;
            (0..n).map(|i| a * (TAU * f * i as f64 / fs).sin()).collect()
        }
        FixtureKind::Chirp => {
            // Exponential sweep over three octaves, capped below Nyquist.
            let f1 = need_f(100.0, f64::MIN_POSITIVE, nyquist)?;
            let f2 = (f1 * 8.0).min(0.9 * nyquist).max(f1);
            let t_end = n as f64 / fs;
            let k = (f2 / f1).ln() / t_end;
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let phase = if k > 0.0 { TAU * f1 * ((k * t).exp() - 1.0) / k } else { TAU * f1 * t };
                    a * phase.sin()
                })
                .collect()
        }
        FixtureKind::NoiseBurst => {
            let attack = (0.002 * fs).max(1.0);
            let tau = spec.duration_s / 4.0;
            let raw: Vec<f64> = (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let env = (i as f64 / attack).min(1.0) * (-t / tau).exp();
                    env * r.random_range(-1.0..1.0)
                })
                .collect();
            peak_scale(raw, a)
        }
        FixtureKind::ImpulseTrain => {
            let rate = need_f(100.0, f64::MIN_POSITIVE, fs)?;
            let mut v = vec![0.0; n];
            let mut k = 0usize;
            loop {
                let idx = (k as f64 * fs / rate).round() as usize;
                if idx >= n {
                    break;
                }
                v[idx] = a;
                k += 1;
            }
            v
        }
        FixtureKind::SyntheticBabbleVoice => {
            let f = need_f(f64::NAN, VOICE_PITCH_HZ.0, VOICE_PITCH_HZ.1)?;
            peak_scale(voice(n, fs, f, &mut r), a)
        }
    };
    Ok(AudioBuffer::new(samples, sample_rate)?)
}

fn peak_scale(mut v: Vec<f64>, peak: f64) -> Vec<f64> {
    let p = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p > 0.0 {
        let g = peak / p;
        v.iter_mut().for_each(|x| *x *= g);
    }
    v
}

/// Harmonics of a jittered pitch under a 4 Hz syllabic envelope.
fn voice(n: usize, fs: f64, f0: f64, r: &mut impl Rng) -> Vec<f64> {
    let top = (4000.0f64).min(0.45 * fs);
    let harmonics = ((top / f0).floor() as usize).max(1);
    let syllable = (fs / SYLLABLE_HZ).round().max(1.0) as usize;
    let n_syl = n.div_ceil(syllable) + 1;
    // Per-syllable level, pitch offset and a chance of a pause.
    let levels: Vec<f64> = (0..n_syl)
        .map(|_| if r.random_bool(0.15) { 0.0 } else { r.random_range(0.4..1.0) })
        .collect();
    let pitch: Vec<f64> = (0..n_syl).map(|_| r.random_range(-PITCH_GLIDE..PITCH_GLIDE)).collect();
    let tilt: Vec<f64> = (0..harmonics).map(|_| r.random_range(0.6..1.0)).collect();
    let jitter = Normal::new(0.0, PITCH_JITTER).expect("valid");
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = i / syllable;
        let frac = (i % syllable) as f64 / syllable as f64;
        // Pitch glides between syllable targets.
        let p = pitch[s] + (pitch[s + 1] - pitch[s]) * frac;
        let f = f0 * (1.0 + p + jitter.sample(r));
        phase = (phase + TAU * f / fs) % TAU;
        let env = levels[s] * (std::f64::consts::PI * frac).sin().powi(2);
        // sin(h x) by the Chebyshev recurrence.
        let (s1, two_c) = (phase.sin(), 2.0 * phase.cos());
        let (mut prev, mut cur) = (0.0, s1);
        let mut v = 0.0;
        for (k, g) in tilt.iter().enumerate() {
            let h = (k + 1) as f64;
            if h * f >= 0.5 * fs {
                break;
            }
            v += g / h * cur;
            (prev, cur) = (cur, two_c * cur - prev);
        }
        out.push(env * v);
    }
    out
}

const VOCABULARY: &[&str] = &[
    "the", "a", "cat", "dog", "sat", "on", "mat", "we", "read", "book", "teacher", "class",
    "number", "seven", "three", "plus", "equals", "what", "is", "this", "look", "at", "board",
    "write", "your", "name", "please", "open", "page", "twelve", "why", "because", "water",
    "plant", "grow", "sun", "light", "shape", "circle", "square", "count", "to", "ten", "good",
    "job", "let's", "try", "again", "who", "knows", "answer", "science", "map", "river", "don't",
    "forget", "homework", "lunch", "time", "listen", "carefully",
];

fn random_transcript(words: usize, r: &mut impl Rng) -> String {
    (0..words.max(1))
        .map(|_| *VOCABULARY.choose(r).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Durations of generated utterances.
pub const UTTERANCE_DURATION_S: (f64, f64) = (2.0, 10.0);
/// Utterances per synthetic speaker (the last speaker may get fewer).
const UTTERANCES_PER_SPEAKER: usize = 3;

/// Writes `n_child` child and `n_adult` adult voices under `out_dir` with
/// `manifest.jsonl` (all records), `child_manifest.jsonl` and
/// `adult_manifest.jsonl`. Audio paths in the manifests are relative to
/// `out_dir`.
pub fn generate_fixture_corpus(
    n_child: usize,
    n_adult: usize,
    out_dir: &Path,
    seed: u64,
    sample_rate: u32,
) -> Result<Vec<UtteranceRecord>, FixtureError> {
    let plans = plan_fixture_corpus(n_child, n_adult, seed, sample_rate);
    plans.par_iter().try_for_each(|p| -> Result<(), FixtureError> {
        let audio = generate_fixture(&p.spec, sample_rate)?;
        write_wav(&audio, out_dir.join(&p.record.audio_path), WavEncoding::Float32)?;
        Ok(())
    })?;
    let records: Vec<UtteranceRecord> = plans.into_iter().map(|p| p.record).collect();
    let (kids, adults): (Vec<_>, Vec<_>) = records.iter().cloned().partition(|r| r.role == Role::Child);
    write_jsonl(&out_dir.join("manifest.jsonl"), &records)?;
    write_jsonl(&out_dir.join("child_manifest.jsonl"), &kids)?;
    write_jsonl(&out_dir.join("adult_manifest.jsonl"), &adults)?;
    Ok(records)
}

/// One utterance of a fixture corpus before any audio is rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct FixturePlan {
    pub record: UtteranceRecord,
    pub spec: FixtureSpec,
}

/// The records and voice specs [`generate_fixture_corpus`] would write.
pub fn plan_fixture_corpus(n_child: usize, n_adult: usize, seed: u64, sample_rate: u32) -> Vec<FixturePlan> {
    let mut plans = Vec::with_capacity(n_child + n_adult);
    for (role, count, band, tag) in [
        (Role::Child, n_child, CHILD_PITCH_HZ, "child"),
        (Role::Adult, n_adult, ADULT_PITCH_HZ, "adult"),
    ] {
        let mut r = stream(seed, tag, 0);
        let speakers = count.div_ceil(UTTERANCES_PER_SPEAKER).max(1);
        let (lo, hi) = (band.0 * BAND_MARGIN, band.1 / BAND_MARGIN);
        let pitches: Vec<f64> = (0..speakers).map(|_| r.random_range(lo..=hi)).collect();
        for i in 0..count {
            let spk = i / UTTERANCES_PER_SPEAKER;
            let n = (r.random_range(UTTERANCE_DURATION_S.0..=UTTERANCE_DURATION_S.1) * sample_rate as f64)
                .round() as usize;
            let duration_s = n as f64 / sample_rate as f64;
            // Small per-utterance drift that stays inside the band.
            let f0 = (pitches[spk] * r.random_range(0.99..1.01)).clamp(lo, hi);
            let words = (duration_s * 2.0).round() as usize;
            let id = format!("{tag}{i:05}");
            plans.push(FixturePlan {
                record: UtteranceRecord {
                    id: id.clone(),
                    audio_path: PathBuf::from(tag).join(format!("{id}.wav")),
                    speaker_id: format!("{tag}_spk{spk:04}"),
                    role,
                    source_tag: format!("fixture_{tag}"),
                    duration_s,
                    transcript: Some(random_transcript(words, &mut r)),
                    split: None,
                },
                spec: FixtureSpec {
                    kind: FixtureKind::SyntheticBabbleVoice,
                    duration_s,
                    fundamental_hz: Some(f0),
                    seed: derive_seed(seed, &id, 0),
                    amplitude: r.random_range(0.3..0.7),
                },
            });
        }
    }
    plans
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenePoolSizes {
    pub babble: usize,
    pub chair: usize,
    pub ambient: usize,
}

impl Default for ScenePoolSizes {
    fn default() -> Self {
        Self {
            babble: 24,
            chair: 6,
            ambient: 2,
        }
    }
}

/// Writes `babble/`, `chair/` and `ambient/` clip directories plus a
/// `scene.json` that points at them.
pub fn generate_scene_pools(
    out_dir: &Path,
    sizes: ScenePoolSizes,
    seed: u64,
    sample_rate: u32,
) -> Result<PathBuf, FixtureError> {
    let mut specs: Vec<(PathBuf, FixtureSpec)> = Vec::new();
    let mut r = stream(seed, "pools", 0);
    for i in 0..sizes.babble {
        let band = if i % 2 == 0 { CHILD_PITCH_HZ } else { ADULT_PITCH_HZ };
        let spec = FixtureSpec {
            kind: FixtureKind::SyntheticBabbleVoice,
            duration_s: (r.random_range(1.5..6.0) * sample_rate as f64).round() / sample_rate as f64,
            fundamental_hz: Some(r.random_range(band.0..=band.1)),
            seed: derive_seed(seed, "babble", i as u64),
            amplitude: r.random_range(0.3..0.7),
        };
        specs.push((PathBuf::from("babble").join(format!("voice{i:03}.wav")), spec));
    }
    for i in 0..sizes.chair {
        let spec = FixtureSpec {
            kind: FixtureKind::NoiseBurst,
            duration_s: r.random_range(0.2..0.6),
            fundamental_hz: None,
            seed: derive_seed(seed, "chair", i as u64),
            amplitude: r.random_range(0.4..0.9),
        };
        specs.push((PathBuf::from("chair").join(format!("chair{i:03}.wav")), spec));
    }
    for i in 0..sizes.ambient {
        let spec = FixtureSpec {
            kind: FixtureKind::NoiseBurst,
            duration_s: 5.0,
            fundamental_hz: None,
            seed: derive_seed(seed, "ambient", i as u64),
            amplitude: 0.2,
        };
        specs.push((PathBuf::from("ambient").join(format!("hum{i:03}.wav")), spec));
    }
    specs.par_iter().try_for_each(|(path, spec)| -> Result<(), FixtureError> {
        let mut audio = generate_fixture(spec, sample_rate)?;
        if path.starts_with("ambient") {
            audio = ambient_bed(&audio, spec.seed)?;
        }
        write_wav(&audio, out_dir.join(path), WavEncoding::Float32)?;
        Ok(())
    })?;
    let scene = serde_json::json!({
        "babble_pool": ["babble"],
        "chair_pool": ["chair"],
        "ambient_pool": ["ambient"],
    });
    let path = out_dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string_pretty(&scene).expect("json") + "\n")
        .map_err(|source| FixtureError::IoFailure {
            path: path.clone(),
            source,
        })?;
    Ok(path)
}

/// Steady broadband hiss plus a mains-like hum, replacing the decaying burst.
fn ambient_bed(template: &AudioBuffer, seed: u64) -> Result<AudioBuffer, FixtureError> {
    let fs = template.sample_rate() as f64;
    let mut r = rng(seed);
    let v = (0..template.len())
        .map(|i| {
            let t = i as f64 / fs;
            0.05 * r.random_range(-1.0..1.0) + 0.1 * (TAU * 50.0 * t).sin() + 0.05 * (TAU * 100.0 * t).sin()
        })
        .collect();
    Ok(AudioBuffer::new(v, template.sample_rate())?)
}

/// Word-level corruption at roughly `error_rate` per reference word:
/// substitutions, deletions and insertions in a 2:1:1 ratio.
pub fn corrupt_transcript(text: &str, error_rate: f64, r: &mut impl Rng) -> String {
    let p = error_rate.clamp(0.0, 1.0);
    let mut out: Vec<&str> = Vec::new();
    for w in text.split_whitespace() {
        if r.random_bool(p) {
            match r.random_range(0..4) {
                0 | 1 => out.push(VOCABULARY.choose(r).expect("non-empty")),
                2 => {}
                _ => {
                    out.push(w);
                    out.push(VOCABULARY.choose(r).expect("non-empty"));
                }
            }
        } else {
            out.push(w);
        }
    }
    out.join(" ")
}

/// A stand-in recognizer output for one mixed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_snr_db: Option<f64>,
}

/// Error rate of the dummy recognizer at a given SNR: 5% at 15 dB rising
/// linearly to 45% at -5 dB.
pub fn dummy_error_rate(snr_db: f64) -> f64 {
    (0.05 + 0.02 * (15.0 - snr_db)).clamp(0.0, 1.0)
}

/// Corrupts each mix transcript at [`dummy_error_rate`] of its SNR.
pub fn dummy_hypotheses(mixes: &[MixManifest], seed: u64) -> Vec<Hypothesis> {
    mixes
        .iter()
        .map(|m| {
            let mut r = stream(seed, &m.id, 0);
            let text = m
                .transcript
                .as_deref()
                .map(|t| corrupt_transcript(t, dummy_error_rate(m.target_snr_db), &mut r))
                .unwrap_or_default();
            Hypothesis {
                id: m.id.clone(),
                text,
                target_snr_db: Some(m.target_snr_db),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_and_silence_lengths() {
        let t = generate_fixture(&FixtureSpec::new(FixtureKind::Tone, 1.0).with_fundamental(440.0), 16000)
            .unwrap();
        assert_eq!(t.len(), 16000);
        let s = generate_fixture(&FixtureSpec::new(FixtureKind::Silence, 2.0), 16000).unwrap();
        assert_eq!(s.len(), 32000);
        assert!(s.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn voice_pitch_is_validated() {
        for f in [None, Some(59.0), Some(501.0)] {
            let spec = FixtureSpec {
                fundamental_hz: f,
                ..FixtureSpec::new(FixtureKind::SyntheticBabbleVoice, 1.0)
            };
            assert!(matches!(generate_fixture(&spec, 16000), Err(FixtureError::InvalidSpec(_))));
        }
        assert!(matches!(
            generate_fixture(&FixtureSpec::new(FixtureKind::Tone, 0.0), 16000),
            Err(FixtureError::InvalidSpec(_))
        ));
    }

    #[test]
    fn impulse_train_spacing() {
        let a = generate_fixture(&FixtureSpec::new(FixtureKind::ImpulseTrain, 0.1).with_fundamental(100.0), 16000)
            .unwrap();
        let idx: Vec<usize> = a.samples().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        assert_eq!(idx, vec![0, 160, 320, 480, 640, 800, 960, 1120, 1280, 1440]);
    }

    #[test]
    fn corruption_rate_zero_is_identity() {
        let mut r = rng(1);
        assert_eq!(corrupt_transcript("a b c", 0.0, &mut r), "a b c");
    }
}
