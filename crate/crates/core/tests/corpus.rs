use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use classroom_sim::audio::{read_wav, write_wav, AudioBuffer, WavEncoding};
use classroom_sim::corpus::{
    assert_disjoint, build_clean, make_splits, mix_dataset, pair_utterances, plan_clean, read_jsonl,
    snr_label, verify_mixes, write_jsonl, CleanOptions, CleanRecord, CorpusError, GroupKey,
    MixManifest, MixOptions, PairOrder, Role, Split, SplitRatios, UtteranceRecord,
};
use classroom_sim::fixtures::{generate_fixture, generate_fixture_corpus, FixtureKind, FixtureSpec};
use proptest::prelude::*;

fn fixture_corpus(dir: &Path, nc: usize, na: usize, seed: u64) -> (Vec<UtteranceRecord>, Vec<UtteranceRecord>) {
    let recs = generate_fixture_corpus(nc, na, dir, seed, 16000).unwrap();
    let resolve = |r: &UtteranceRecord| UtteranceRecord {
        audio_path: dir.join(&r.audio_path),
        ..r.clone()
    };
    let kids = recs.iter().filter(|r| r.role == Role::Child).map(resolve).collect();
    let adults = recs.iter().filter(|r| r.role == Role::Adult).map(resolve).collect();
    (kids, adults)
}

#[test]
fn clean_build_bookkeeping() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let (kids, adults) = fixture_corpus(src.path(), 20, 10, 3);
    let opts = CleanOptions {
        seed: 4,
        ..Default::default()
    };
    let stats = build_clean(&kids, &adults, out.path(), &opts).unwrap();
    let recs: Vec<CleanRecord> = read_jsonl(&out.path().join("manifest.jsonl")).unwrap();
    assert_eq!(stats.files, recs.len());

    let mut total = 0.0;
    let mut used = BTreeSet::new();
    for r in &recs {
        let a = read_wav(out.path().join(&r.audio_path)).unwrap();
        assert_eq!(a.duration_seconds(), r.duration_s);
        total += r.duration_s;
        assert!(r.audio_path.starts_with(Path::new(r.split.as_str()).join("clean")));
        assert_eq!(r.loudness_normalization, "none");
        assert!(used.insert(r.first_id.clone()));
        if let Some(s) = &r.second_id {
            assert!(used.insert(s.clone()));
        }
        // Timeline: second speaker starts `overlap_s` before the first ends.
        if r.timeline.len() == 2 {
            let gap = r.timeline[0].end_s - r.timeline[1].start_s;
            assert!((gap - r.overlap_s).abs() <= 0.5 / 16000.0 + 1e-12, "{}", r.id);
            assert_eq!(r.timeline[1].end_s, r.duration_s);
        }
    }
    assert_eq!(used.len(), 30);
    assert!((stats.total_duration_s - total).abs() < 1e-9);
    assert!((stats.total_hours - total / 3600.0).abs() < 1e-12);

    // Leaf and split manifests partition the root manifest.
    let mut n = 0;
    for s in Split::ALL {
        let leaf: Vec<CleanRecord> = read_jsonl(&out.path().join(s.as_str()).join("clean").join("manifest.jsonl")).unwrap();
        let mid: Vec<CleanRecord> = read_jsonl(&out.path().join(s.as_str()).join("manifest.jsonl")).unwrap();
        assert_eq!(leaf, mid);
        assert!(leaf.iter().all(|r| r.split == s));
        n += leaf.len();
    }
    assert_eq!(n, recs.len());
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(on_disk["files"], recs.len());
}

#[test]
fn overlaps_are_hard_sums() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let (kids, adults) = fixture_corpus(src.path(), 12, 12, 5);
    let opts = CleanOptions {
        overlap_fraction: 1.0,
        ..Default::default()
    };
    build_clean(&kids, &adults, out.path(), &opts).unwrap();
    let recs: Vec<CleanRecord> = read_jsonl(&out.path().join("manifest.jsonl")).unwrap();
    let by_id: BTreeMap<&str, &UtteranceRecord> = kids.iter().chain(&adults).map(|r| (r.id.as_str(), r)).collect();
    let mut checked = 0;
    for r in recs.iter().filter(|r| r.overlap_s > 0.0) {
        assert!((0.5..=1.0).contains(&r.overlap_s));
        let a = read_wav(&by_id[r.first_id.as_str()].audio_path).unwrap();
        let b = read_wav(&by_id[r.second_id.as_deref().unwrap()].audio_path).unwrap();
        let y = read_wav(out.path().join(&r.audio_path)).unwrap();
        let ov = (r.overlap_s * 16000.0).round() as usize;
        assert_eq!(y.len(), a.len() + b.len() - ov);
        let off = a.len() - ov;
        for i in 0..y.len() {
            let mut want = 0.0;
            if i < a.len() {
                want += a.samples()[i];
            }
            if i >= off {
                want += b.samples()[i - off];
            }
            // Float32 storage of the sum.
            assert_eq!(y.samples()[i], want as f32 as f64);
        }
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn zero_fraction_means_no_overlap() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let (kids, adults) = fixture_corpus(src.path(), 10, 10, 6);
    let opts = CleanOptions {
        overlap_fraction: 0.0,
        ..Default::default()
    };
    let stats = build_clean(&kids, &adults, out.path(), &opts).unwrap();
    assert_eq!(stats.overlapped, 0);
    assert!(stats.overlap_min_s.is_none());
}

#[test]
fn preassigned_splits_are_kept_and_leaks_rejected() {
    let mk = |id: usize, role: Role, spk: &str, split: Split| UtteranceRecord {
        id: format!("u{id}"),
        audio_path: PathBuf::from("x.wav"),
        speaker_id: spk.into(),
        role,
        source_tag: "t".into(),
        duration_s: 3.0,
        transcript: None,
        split: Some(split),
    };
    let kids = vec![mk(0, Role::Child, "c0", Split::Train), mk(1, Role::Child, "c1", Split::Test)];
    let adults = vec![mk(2, Role::Adult, "a0", Split::Train), mk(3, Role::Adult, "a1", Split::Test)];
    let plans = plan_clean(&kids, &adults, &CleanOptions::default()).unwrap();
    for (split, ps) in &plans {
        for p in ps {
            assert_eq!(p.first.split, Some(*split));
        }
    }
    let leaky = vec![mk(0, Role::Child, "c0", Split::Train), mk(1, Role::Child, "c0", Split::Test)];
    assert!(matches!(
        plan_clean(&leaky, &adults, &CleanOptions::default()),
        Err(CorpusError::LeakedGroup { .. })
    ));
    let mut mixed = kids.clone();
    mixed[0].split = None;
    assert!(matches!(plan_clean(&mixed, &adults, &CleanOptions::default()), Err(CorpusError::Invalid(_))));
}

/// Tiny clean base of constant-envelope noise clips.
fn tiny_clean(root: &Path, n: usize, len: usize) -> Vec<CleanRecord> {
    (0..n)
        .map(|i| {
            let spec = FixtureSpec::new(FixtureKind::Tone, len as f64 / 16000.0).with_fundamental(300.0 + i as f64);
            let audio = generate_fixture(&spec, 16000).unwrap();
            let rel = PathBuf::from("train/clean").join(format!("c{i:05}.wav"));
            write_wav(&audio, root.join(&rel), WavEncoding::Float32).unwrap();
            CleanRecord {
                id: format!("c{i:05}"),
                split: Split::Train,
                audio_path: rel,
                duration_s: audio.duration_seconds(),
                order: PairOrder::Solo,
                overlap_s: 0.0,
                first_id: format!("c{i:05}"),
                second_id: None,
                speakers: vec!["s".into()],
                transcript: Some("a b c".into()),
                timeline: vec![],
                loudness_normalization: "none".into(),
            }
        })
        .collect()
}

fn noise_files(dir: &Path, n: usize) -> Vec<PathBuf> {
    (0..n)
        .map(|i| {
            let a = generate_fixture(
                &FixtureSpec::new(FixtureKind::NoiseBurst, 1.3).with_seed(i as u64),
                16000,
            )
            .unwrap();
            let p = dir.join(format!("n{i}.wav"));
            write_wav(&a, &p, WavEncoding::Float32).unwrap();
            p
        })
        .collect()
}

#[test]
fn sweep_is_a_cross_product_and_verifies() {
    let root = tempfile::tempdir().unwrap();
    let nd = tempfile::tempdir().unwrap();
    let clean = tiny_clean(root.path(), 10, 8000);
    let noise = noise_files(nd.path(), 3);
    let opts = MixOptions {
        sweep: true,
        seed: 2,
        ..Default::default()
    };
    let stats = mix_dataset(&clean, root.path(), &noise, root.path(), &opts).unwrap();
    assert_eq!(stats.files, 50);
    assert!(stats.max_abs_snr_error_db <= 0.1);
    let m: Vec<MixManifest> = read_jsonl(&root.path().join("mix_manifest.jsonl")).unwrap();
    assert_eq!(m.len(), 50);
    for snr in [-5.0, 0.0, 5.0, 10.0, 15.0] {
        let leaf: Vec<MixManifest> =
            read_jsonl(&root.path().join("train").join(snr_label(snr)).join("manifest.jsonl")).unwrap();
        assert_eq!(leaf.len(), 10);
        for e in &leaf {
            assert!(root.path().join(&e.output_path).is_file());
            assert!((e.measured_snr_db - snr).abs() <= 0.1);
        }
    }
    assert_eq!(verify_mixes(root.path(), &m, 16000, opts.modes, 0.1).unwrap(), 50);
}

#[test]
fn tampered_mix_fails_verification() {
    let root = tempfile::tempdir().unwrap();
    let nd = tempfile::tempdir().unwrap();
    let clean = tiny_clean(root.path(), 4, 4000);
    let noise = noise_files(nd.path(), 2);
    let opts = MixOptions::default();
    mix_dataset(&clean, root.path(), &noise, root.path(), &opts).unwrap();
    let m: Vec<MixManifest> = read_jsonl(&root.path().join("mix_manifest.jsonl")).unwrap();
    let victim = root.path().join(&m[1].output_path);
    let mut a = read_wav(&victim).unwrap().into_samples();
    a[100] += 1e-3;
    write_wav(&AudioBuffer::new(a, 16000).unwrap(), &victim, WavEncoding::Float32).unwrap();
    match verify_mixes(root.path(), &m, 16000, opts.modes, 0.1) {
        Err(CorpusError::VerificationFailed(files)) => {
            assert_eq!(files.len(), 1);
            assert!(files[0].contains(&m[1].output_path.display().to_string()));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn uniform_snr_draw_fills_bins_evenly() {
    let root = tempfile::tempdir().unwrap();
    let nd = tempfile::tempdir().unwrap();
    let n = 5000;
    let clean = tiny_clean(root.path(), n, 400);
    let noise = noise_files(nd.path(), 4);
    let opts = MixOptions {
        seed: 17,
        ..Default::default()
    };
    let stats = mix_dataset(&clean, root.path(), &noise, root.path(), &opts).unwrap();
    assert_eq!(stats.files, n);
    // Binomial(5000, 1/5): mean 1000, sigma sqrt(800).
    let sigma = (n as f64 * 0.2 * 0.8).sqrt();
    for (label, count) in &stats.per_snr {
        assert!((*count as f64 - 1000.0).abs() <= 3.0 * sigma, "{label}: {count}");
    }
    assert_eq!(stats.per_snr.len(), 5);
}

fn records_strategy() -> impl Strategy<Value = Vec<UtteranceRecord>> {
    prop::collection::vec((0usize..40, 0.5f64..12.0, any::<bool>()), 3..200).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (spk, dur, child))| UtteranceRecord {
                id: format!("u{i}"),
                audio_path: PathBuf::from(format!("u{i}.wav")),
                speaker_id: format!("s{spk}"),
                role: if child { Role::Child } else { Role::Adult },
                source_tag: format!("tag{}", spk % 7),
                duration_s: dur,
                transcript: None,
                split: None,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn splits_never_share_groups(recs in records_strategy(), seed in any::<u64>(), by_tag in any::<bool>()) {
        let key = if by_tag { GroupKey::SourceTag } else { GroupKey::SpeakerId };
        let groups: BTreeSet<&str> = recs.iter().map(|r| key.of(r)).collect();
        match make_splits(&recs, SplitRatios::default(), key, seed) {
            Ok(s) => {
                prop_assert!(assert_disjoint(&s, key).is_ok());
                let sets: Vec<BTreeSet<&str>> = Split::ALL.iter().map(|&sp| s.get(sp).iter().map(|r| key.of(r)).collect()).collect();
                prop_assert!(sets[0].is_disjoint(&sets[1]) && sets[0].is_disjoint(&sets[2]) && sets[1].is_disjoint(&sets[2]));
                prop_assert_eq!(s.train.len() + s.dev.len() + s.test.len(), recs.len());
            }
            Err(CorpusError::TooFewGroups(n)) => prop_assert!(groups.len() < 3 && n == groups.len()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn pairing_uses_each_record_once(recs in records_strategy(), frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let kids: Vec<_> = recs.iter().filter(|r| r.role == Role::Child).cloned().collect();
        let adults: Vec<_> = recs.iter().filter(|r| r.role == Role::Adult).cloned().collect();
        prop_assume!(!kids.is_empty());
        let plans = pair_utterances(&kids, &adults, frac, seed).unwrap();
        let mut ids = BTreeSet::new();
        for p in &plans {
            prop_assert!(ids.insert(p.first.id.clone()));
            if let Some(s) = &p.second {
                prop_assert!(ids.insert(s.id.clone()));
                prop_assert_ne!(p.first.role, s.role);
                let shorter = p.first.duration_s.min(s.duration_s);
                prop_assert!(p.overlap_s == 0.0 || (p.overlap_s >= 0.5 && p.overlap_s <= 1.0 && p.overlap_s <= shorter - 0.1 + 1e-12));
            } else {
                prop_assert_eq!(p.overlap_s, 0.0);
            }
        }
        prop_assert_eq!(ids.len(), recs.len());
        let pairs = kids.len().min(adults.len());
        let eligible = plans.iter().filter(|p| p.second.as_ref().is_some_and(|s| s.duration_s.min(p.first.duration_s) - 0.1 >= 0.5)).count();
        let overlapped = plans.iter().filter(|p| p.overlap_s > 0.0).count();
        prop_assert_eq!(overlapped, ((frac * pairs as f64).round() as usize).min(eligible));
    }

    #[test]
    fn manifests_round_trip(recs in records_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        write_jsonl(&p, &recs).unwrap();
        let back: Vec<UtteranceRecord> = read_jsonl(&p).unwrap();
        prop_assert_eq!(back, recs);
    }
}
