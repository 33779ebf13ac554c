//! A room from JSON with a user material, and a rejected material name.
//!
//! cargo run --release --example custom_room

use classroom_sim::geometry::Vec3;
use classroom_sim::rir::{estimate_rt60, synthesize_rir, RirParams, SourceSpec};
use classroom_sim::room::{build_room, sabine_rt60, RoomDescription};

const ROOM: &str = r#"{
  "dimensions": [7.5, 6.0, 2.8],
  "walls": {"default": "painted_plaster", "floor": "carpet", "ceiling": "felt_panel"},
  "materials": {
    "felt_panel": {
      "absorption": [0.10, 0.25, 0.55, 0.80, 0.85, 0.85],
      "scattering": [0.1, 0.1, 0.2, 0.3, 0.4, 0.5]
    }
  },
  "furniture": [
    {"center": [3.0, 3.0, 0.375], "size": [2.4, 1.2, 0.75], "material": "wood_desk", "label": "table"}
  ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let desc: RoomDescription = serde_json::from_str(ROOM)?;
    let room = build_room(&desc)?;
    let sabine = sabine_rt60(&room)?;
    println!("Sabine RT60 by band: {:.3?}", sabine.seconds);

    let src = SourceSpec::omni(Vec3::new(1.5, 1.5, 1.5));
    let rir = synthesize_rir(&room, &src, Vec3::new(6.0, 4.5, 1.2), &RirParams::default())?;
    println!("measured from the RIR: {:.3} s", estimate_rt60(&rir)?);

    // Unknown names are rejected with the offending material.
    let mut bad = desc.clone();
    bad.walls.insert("floor".into(), "shag_rug".into());
    match build_room(&bad) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
