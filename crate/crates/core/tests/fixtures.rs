use std::collections::BTreeMap;

use classroom_sim::audio::{read_wav, AudioBuffer};
use classroom_sim::corpus::{read_jsonl, Role, UtteranceRecord};
use classroom_sim::fixtures::{
    generate_fixture, generate_fixture_corpus, plan_fixture_corpus, FixtureKind, FixtureSpec,
    ADULT_PITCH_HZ, CHILD_PITCH_HZ,
};
use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use sha2::{Digest, Sha256};

fn spectrum_peak_hz(a: &AudioBuffer) -> f64 {
    let n = a.len();
    let mut buf: Vec<Complex<f64>> = a.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let k = (0..n / 2).max_by(|&i, &j| buf[i].norm().total_cmp(&buf[j].norm())).unwrap();
    k as f64 * a.sample_rate() as f64 / n as f64
}

/// Median pitch over loud 64 ms frames by normalized autocorrelation,
/// taking the local peak at the shortest lag within 10% of the best.
fn median_pitch(a: &AudioBuffer) -> f64 {
    let fs = a.sample_rate() as f64;
    let x = a.samples();
    let frame = 1024;
    let (lo, hi) = ((fs / 500.0) as usize, (fs / 60.0) as usize + 1);
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut est = Vec::new();
    for start in (0..x.len().saturating_sub(frame + hi)).step_by(frame) {
        let f = &x[start..start + frame];
        if f.iter().map(|v| v * v).sum::<f64>() / (frame as f64) < (0.2 * peak).powi(2) {
            continue;
        }
        let r: Vec<f64> = (lo..=hi)
            .map(|tau| {
                let g = &x[start + tau..start + tau + frame];
                let num: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
                let den = (f.iter().map(|v| v * v).sum::<f64>() * g.iter().map(|v| v * v).sum::<f64>()).sqrt();
                num / den
            })
            .collect();
        let best = r.iter().cloned().fold(f64::MIN, f64::max);
        let mut i = r.iter().position(|&v| v >= 0.9 * best).unwrap();
        while i + 1 < r.len() && r[i + 1] > r[i] {
            i += 1;
        }
        // Parabolic refinement around the chosen lag.
        let off = if i > 0 && i + 1 < r.len() {
            let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
            0.5 * (a - c) / (a - 2.0 * b + c)
        } else {
            0.0
        };
        est.push(fs / ((lo + i) as f64 + off));
    }
    assert!(!est.is_empty());
    est.sort_by(f64::total_cmp);
    est[est.len() / 2]
}

#[test]
fn tone_has_its_spectral_peak() {
    let a = generate_fixture(&FixtureSpec::new(FixtureKind::Tone, 1.0).with_fundamental(440.0), 16000).unwrap();
    assert_eq!(a.len(), 16000);
    assert_eq!(spectrum_peak_hz(&a), 440.0);
}

#[test]
fn every_kind_is_deterministic_and_exact_length() {
    for kind in [
        FixtureKind::Tone,
        FixtureKind::Chirp,
        FixtureKind::NoiseBurst,
        FixtureKind::SyntheticBabbleVoice,
        FixtureKind::ImpulseTrain,
        FixtureKind::Silence,
    ] {
        let spec = FixtureSpec::new(kind, 1.2345).with_fundamental(200.0).with_seed(9);
        let a = generate_fixture(&spec, 16000).unwrap();
        let b = generate_fixture(&spec, 16000).unwrap();
        assert_eq!(a.samples(), b.samples(), "{kind:?}");
        assert_eq!(a.len(), 19752, "{kind:?}");
        assert!(a.peak() <= 0.5 + 1e-12, "{kind:?}");
    }
    let a = generate_fixture(&FixtureSpec::new(FixtureKind::NoiseBurst, 0.5).with_seed(1), 16000).unwrap();
    let b = generate_fixture(&FixtureSpec::new(FixtureKind::NoiseBurst, 0.5).with_seed(2), 16000).unwrap();
    assert_ne!(a.samples(), b.samples());
}

#[test]
fn voice_pitch_tracks_the_fundamental() {
    for f0 in [100.0, 160.0, 300.0, 380.0] {
        let a = generate_fixture(
            &FixtureSpec::new(FixtureKind::SyntheticBabbleVoice, 3.0).with_fundamental(f0).with_seed(4),
            16000,
        )
        .unwrap();
        let p = median_pitch(&a);
        assert!((p / f0 - 1.0).abs() < 0.05, "f0 {f0}: estimated {p}");
    }
}

fn file_hash(path: &std::path::Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn corpus_counts_durations_and_speakers() {
    let dir = tempfile::tempdir().unwrap();
    let recs = generate_fixture_corpus(20, 10, dir.path(), 5, 16000).unwrap();
    assert_eq!(recs.len(), 30);
    let lines: Vec<UtteranceRecord> = read_jsonl(&dir.path().join("manifest.jsonl")).unwrap();
    assert_eq!(lines, recs);
    let kids: Vec<UtteranceRecord> = read_jsonl(&dir.path().join("child_manifest.jsonl")).unwrap();
    assert_eq!(kids.len(), 20);
    assert!(kids.iter().all(|r| r.role == Role::Child));

    let mut per_speaker: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &recs {
        *per_speaker.entry(&r.speaker_id).or_default() += 1;
        let a = read_wav(dir.path().join(&r.audio_path)).unwrap();
        assert_eq!(a.len() as f64 / 16000.0, r.duration_s, "{}", r.id);
        assert!((2.0..=10.0).contains(&r.duration_s));
        assert!(r.transcript.as_deref().is_some_and(|t| !t.is_empty()));
    }
    assert!(per_speaker.len() < recs.len());
    assert!(per_speaker.values().any(|&n| n >= 2));
}

#[test]
fn corpus_pitch_bands_separate_roles() {
    let dir = tempfile::tempdir().unwrap();
    let recs = generate_fixture_corpus(6, 6, dir.path(), 11, 16000).unwrap();
    for r in &recs {
        let a = read_wav(dir.path().join(&r.audio_path)).unwrap();
        let p = median_pitch(&a);
        let (lo, hi) = match r.role {
            Role::Child => CHILD_PITCH_HZ,
            Role::Adult => ADULT_PITCH_HZ,
        };
        // 2% allowance for the estimator.
        assert!(p >= lo * 0.98 && p <= hi * 1.02, "{} {:?}: {p} Hz", r.id, r.role);
    }
    for p in plan_fixture_corpus(200, 200, 3, 16000) {
        let f = p.spec.fundamental_hz.unwrap();
        let (lo, hi) = match p.record.role {
            Role::Child => CHILD_PITCH_HZ,
            Role::Adult => ADULT_PITCH_HZ,
        };
        assert!(f >= lo && f <= hi);
    }
}

#[test]
fn corpus_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = generate_fixture_corpus(4, 3, a.path(), 8, 16000).unwrap();
    let rb = generate_fixture_corpus(4, 3, b.path(), 8, 16000).unwrap();
    assert_eq!(ra, rb);
    for r in &ra {
        assert_eq!(file_hash(&a.path().join(&r.audio_path)), file_hash(&b.path().join(&r.audio_path)));
    }
    assert_eq!(file_hash(&a.path().join("manifest.jsonl")), file_hash(&b.path().join("manifest.jsonl")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn written_fixtures_read_back_at_declared_length(
        kind in prop::sample::select(vec![
            FixtureKind::Tone, FixtureKind::Chirp, FixtureKind::NoiseBurst,
            FixtureKind::SyntheticBabbleVoice, FixtureKind::ImpulseTrain, FixtureKind::Silence,
        ]),
        dur in 0.01f64..2.0,
        f0 in 60.0f64..500.0,
        seed in any::<u64>(),
        rate in prop::sample::select(vec![8000u32, 16000, 22050, 44100]),
    ) {
        let spec = FixtureSpec::new(kind, dur).with_fundamental(f0).with_seed(seed);
        let a = generate_fixture(&spec, rate).unwrap();
        prop_assert_eq!(a.len(), (dur * rate as f64).round() as usize);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        classroom_sim::audio::write_wav(&a, &p, classroom_sim::audio::WavEncoding::Float32).unwrap();
        let back = read_wav(&p).unwrap();
        prop_assert_eq!(back.len(), a.len());
        prop_assert_eq!(back.sample_rate(), rate);
    }
}
