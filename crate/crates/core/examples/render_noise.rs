//! Renders ten seconds of classroom noise from synthetic clip pools.
//!
//! cargo run --release --example render_noise [out_dir]

use std::path::PathBuf;

use classroom_sim::audio::{write_wav, WavEncoding};
use classroom_sim::fixtures::{generate_scene_pools, ScenePoolSizes};
use classroom_sim::scene::{load_scene, render_noise, SceneDescription};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("classroom-sim/render_noise"));
    let scene_path = generate_scene_pools(&out.join("pools"), ScenePoolSizes::default(), 3, 16000)?;

    let mut desc: SceneDescription = serde_json::from_str(&std::fs::read_to_string(&scene_path)?)?;
    desc.duration_s = 10.0;
    desc.babble_source_count = 8;
    desc.chair_rate_hz = 0.3;
    desc.seed = 42;
    let scene = load_scene(&desc, scene_path.parent().unwrap(), 16000)?;
    println!(
        "{} talkers, pools: {} babble / {} chair / {} ambient clips",
        scene.babble_sources.len(),
        scene.babble_pool.len(),
        scene.chair_pool.len(),
        scene.ambient_pool.len()
    );

    let r = render_noise(&scene)?;
    let s = &r.schedule;
    let utterances: usize = s.babble.iter().map(|t| t.utterances.len()).sum();
    println!("{utterances} utterances, {} chair events", s.chairs.len());
    for c in &s.chairs {
        println!("  chair {} at {:.2} s from {:.1?}", c.file, c.time_s, c.position.to_array());
    }
    println!("normalization gain {:.3}, ambient gain {:.3}", r.normalization_gain, r.ambient_gain);
    let path = out.join("classroom_10s.wav");
    write_wav(&r.normalized(), &path, WavEncoding::Float32)?;
    println!("wrote {}", path.display());
    Ok(())
}
