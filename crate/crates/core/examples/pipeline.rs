//! The whole desk-scale pipeline in one process: synthetic voices and clip
//! pools, a noise render, the clean base, an SNR sweep and a WER table from
//! stand-in recognizer output.
//!
//! cargo run --release --example pipeline [out_dir]

use std::path::PathBuf;

use classroom_sim::audio::{write_wav, WavEncoding};
use classroom_sim::corpus::{
    build_clean, mix_dataset, read_jsonl, CleanOptions, CleanRecord, MixManifest, MixOptions, Role, UtteranceRecord,
};
use classroom_sim::fixtures::{dummy_hypotheses, generate_fixture_corpus, generate_scene_pools, ScenePoolSizes};
use classroom_sim::metrics::{corpus_wer, NormalizeOptions, WerItem};
use classroom_sim::scene::{load_scene, render_noise, SceneDescription};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("classroom-sim/pipeline"));
    let (seed, rate) = (2024, 16000);

    let voices = out.join("voices");
    let recs = generate_fixture_corpus(40, 40, &voices, seed, rate)?;
    let recs: Vec<UtteranceRecord> = recs
        .into_iter()
        .map(|r| UtteranceRecord {
            audio_path: voices.join(&r.audio_path),
            ..r
        })
        .collect();
    let (kids, adults): (Vec<_>, Vec<_>) = recs.into_iter().partition(|r| r.role == Role::Child);

    let scene_path = generate_scene_pools(&out.join("pools"), ScenePoolSizes::default(), seed, rate)?;
    let mut desc: SceneDescription = serde_json::from_str(&std::fs::read_to_string(&scene_path)?)?;
    desc.duration_s = 30.0;
    desc.seed = seed;
    let noise = render_noise(&load_scene(&desc, scene_path.parent().unwrap(), rate)?)?;
    let noise_path = out.join("noise/classroom.wav");
    write_wav(&noise.normalized(), &noise_path, WavEncoding::Float32)?;

    let data = out.join("data");
    let clean_opts = CleanOptions {
        seed,
        sample_rate: rate,
        ..CleanOptions::default()
    };
    let stats = build_clean(&kids, &adults, &data, &clean_opts)?;
    println!("clean base: {} files ({} overlapped), {:.1} min", stats.files, stats.overlapped, stats.total_duration_s / 60.0);

    let clean: Vec<CleanRecord> = read_jsonl(&data.join("manifest.jsonl"))?;
    let mix_opts = MixOptions {
        sweep: true,
        seed,
        sample_rate: rate,
        ..MixOptions::default()
    };
    let ms = mix_dataset(&clean, &data, &[noise_path], &data, &mix_opts)?;
    println!("mixed {} files, worst SNR error {:.1e} dB", ms.files, ms.max_abs_snr_error_db);

    let mixes: Vec<MixManifest> = read_jsonl(&data.join("mix_manifest.jsonl"))?;
    let items: Vec<WerItem> = dummy_hypotheses(&mixes, seed)
        .into_iter()
        .zip(&mixes)
        .map(|(h, m)| WerItem {
            id: h.id,
            reference: m.transcript.clone().unwrap_or_default(),
            hypothesis: h.text,
            snr_db: Some(m.target_snr_db),
        })
        .collect();
    let rep = corpus_wer(&items, &NormalizeOptions::default())?;
    println!("{:>6} {:>6} {:>7}", "SNR", "files", "WER");
    for row in &rep.by_snr {
        println!("{:>6} {:>6} {:>7.3}", row.snr_db.unwrap_or(f64::NAN), row.files, row.wer.unwrap_or(f64::NAN));
    }
    Ok(())
}
