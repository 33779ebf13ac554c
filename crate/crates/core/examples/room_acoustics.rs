//! Sabine RT60 per band for the built-in classroom, one synthesized RIR and
//! the RT60 measured back from it.
//!
//! cargo run --release --example room_acoustics [out_dir]

use std::path::PathBuf;

use classroom_sim::audio::{write_wav, WavEncoding};
use classroom_sim::geometry::Vec3;
use classroom_sim::rir::{estimate_rt60, image_sources, synthesize_rir, RirParams, SourceSpec};
use classroom_sim::room::{default_classroom, sabine_rt60, BAND_CENTERS_HZ};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("classroom-sim/room_acoustics"));
    let room = default_classroom();
    let d = room.dimensions();
    println!("room {:.1} x {:.1} x {:.1} m, {} furniture boxes", d.x, d.y, d.z, room.furniture().len());

    let rt = sabine_rt60(&room)?;
    for (f, t) in BAND_CENTERS_HZ.iter().zip(rt.seconds) {
        println!("  {f:>6.0} Hz  RT60 {t:.3} s");
    }

    // Teacher at the board facing the class, listener at a back desk.
    let teacher = SourceSpec {
        position: Vec3::new(4.5, 0.8, 1.6),
        orientation: Vec3::new(0.0, 1.0, 0.0),
        directivity_alpha: 0.5,
        gain: 1.0,
    };
    let seat = Vec3::new(3.5, 5.0, 1.2);
    let params = RirParams::default();
    for order in 0..=3 {
        println!("order {order}: {} image sources", image_sources(&room, &teacher, order, params.scattering_loss)?.len());
    }
    let rir = synthesize_rir(&room, &teacher, seat, &params)?;
    let delay = teacher.position.distance(seat) / params.speed_of_sound;
    println!(
        "RIR {} samples, direct path {:.2} ms, estimated RT60 {:.3} s",
        rir.len(),
        1e3 * delay,
        estimate_rt60(&rir)?
    );
    let path = out.join("teacher_to_seat.wav");
    write_wav(&rir.scaled(1.0 / rir.peak())?, &path, WavEncoding::Float32)?;
    println!("wrote {}", path.display());
    Ok(())
}
