//! Mixes one voice with noise across the SNR grid and checks each result.
//!
//! cargo run --release --example mix_snr [out_dir]

use std::path::PathBuf;

use classroom_sim::audio::{write_wav, WavEncoding};
use classroom_sim::corpus::{mix_at_snr, SnrPowerModes};
use classroom_sim::fixtures::{generate_fixture, FixtureKind, FixtureSpec};
use classroom_sim::metrics::si_sdr;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("classroom-sim/mix_snr"));
    let speech = generate_fixture(
        &FixtureSpec::new(FixtureKind::SyntheticBabbleVoice, 4.0).with_fundamental(280.0).with_seed(3),
        16000,
    )?;
    let noise = generate_fixture(&FixtureSpec::new(FixtureKind::NoiseBurst, 9.0).with_seed(4), 16000)?;

    println!("{:>8} {:>10} {:>12} {:>10}", "target", "gain", "measured", "SI-SDR");
    for snr in [-5.0, 0.0, 5.0, 10.0, 15.0] {
        let m = mix_at_snr(&speech, &noise, snr, 1.25, SnrPowerModes::default())?;
        let sdr = si_sdr(&m.audio, &speech, false)?;
        println!("{snr:>8.1} {:>10.4} {:>12.6} {sdr:>10.2}", m.gain, m.measured_snr_db);
        write_wav(&m.audio, out.join(format!("mix_snr{snr}.wav")), WavEncoding::Float32)?;
    }
    Ok(())
}
