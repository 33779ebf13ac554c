//! Writes one WAV per synthetic fixture kind.
//!
//! cargo run --release --example fixtures [out_dir]

use std::path::PathBuf;

use classroom_sim::audio::{write_wav, WavEncoding};
use classroom_sim::fixtures::{generate_fixture, FixtureKind, FixtureSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("classroom-sim/fixtures"));
    let specs = [
        FixtureSpec::new(FixtureKind::Tone, 1.0).with_fundamental(440.0),
        FixtureSpec::new(FixtureKind::Chirp, 2.0).with_fundamental(100.0),
        FixtureSpec::new(FixtureKind::NoiseBurst, 0.5).with_seed(7),
        FixtureSpec::new(FixtureKind::ImpulseTrain, 1.0).with_fundamental(4.0),
        FixtureSpec::new(FixtureKind::SyntheticBabbleVoice, 3.0).with_fundamental(310.0).with_seed(1),
        FixtureSpec::new(FixtureKind::SyntheticBabbleVoice, 3.0).with_fundamental(120.0).with_seed(2),
        FixtureSpec::new(FixtureKind::Silence, 0.5),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let a = generate_fixture(spec, 16000)?;
        let name = format!("{i}_{}.wav", serde_json::to_value(spec.kind)?.as_str().unwrap_or("x"));
        write_wav(&a, out.join(&name), WavEncoding::Float32)?;
        println!("{name:<32} {:>6} samples  peak {:.2}", a.len(), a.peak());
    }
    Ok(())
}
