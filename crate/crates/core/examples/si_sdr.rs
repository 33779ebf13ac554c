//! SI-SDR of noisy mixtures against their clean reference.
//!
//! cargo run --release --example si_sdr

use classroom_sim::audio::AudioBuffer;
use classroom_sim::corpus::{mix_at_snr, SnrPowerModes};
use classroom_sim::fixtures::{generate_fixture, FixtureKind, FixtureSpec};
use classroom_sim::metrics::{display_db, si_sdr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clean = generate_fixture(
        &FixtureSpec::new(FixtureKind::SyntheticBabbleVoice, 3.0).with_fundamental(140.0).with_seed(8),
        16000,
    )?;
    let noise = generate_fixture(&FixtureSpec::new(FixtureKind::NoiseBurst, 3.0).with_seed(9), 16000)?;
    for snr in [-5.0, 5.0, 15.0] {
        let m = mix_at_snr(&clean, &noise, snr, 0.0, SnrPowerModes::default())?;
        println!("mixed at {snr:>5.1} dB SNR: SI-SDR {:.2} dB", si_sdr(&m.audio, &clean, false)?);
    }

    let half = clean.scaled(0.5)?;
    let v = si_sdr(&half, &clean, false)?;
    println!("rescaled copy: {v} (shown as {} dB)", display_db(v));
    let r = AudioBuffer::new(vec![1.0, 0.0], 16000)?;
    let e = AudioBuffer::new(vec![0.5, 0.5], 16000)?;
    println!("[0.5, 0.5] against [1, 0]: {} dB", si_sdr(&e, &r, false)?);
    Ok(())
}
