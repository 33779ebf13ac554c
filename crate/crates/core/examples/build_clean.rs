//! Pairs synthetic child and adult voices into a clean speech base.
//!
//! cargo run --release --example build_clean [out_dir]

use std::path::PathBuf;

use classroom_sim::corpus::{build_clean, read_jsonl, CleanOptions, CleanRecord, Role};
use classroom_sim::fixtures::generate_fixture_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("classroom-sim/build_clean"));
    let src = out.join("voices");
    let recs = generate_fixture_corpus(60, 45, &src, 11, 16000)?;
    let abs = |r: &classroom_sim::corpus::UtteranceRecord| classroom_sim::corpus::UtteranceRecord {
        audio_path: src.join(&r.audio_path),
        ..r.clone()
    };
    let kids: Vec<_> = recs.iter().filter(|r| r.role == Role::Child).map(abs).collect();
    let adults: Vec<_> = recs.iter().filter(|r| r.role == Role::Adult).map(abs).collect();

    let opts = CleanOptions {
        overlap_fraction: 0.2,
        seed: 11,
        ..CleanOptions::default()
    };
    let stats = build_clean(&kids, &adults, &out.join("data"), &opts)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);

    let clean: Vec<CleanRecord> = read_jsonl(&out.join("data/manifest.jsonl"))?;
    if let Some(c) = clean.iter().find(|c| c.overlap_s > 0.0) {
        println!("example overlapped file {} ({:.2} s overlap):", c.id, c.overlap_s);
        for seg in &c.timeline {
            println!("  {:?} {} {:.2}-{:.2} s", seg.role, seg.speaker_id, seg.start_s, seg.end_s);
        }
    }
    Ok(())
}
