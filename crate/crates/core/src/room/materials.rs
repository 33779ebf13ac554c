use std::collections::BTreeMap;

use crate::geometry::Vec3;

use super::{build_room, AcousticMaterial, BandGains, FurnitureDescription, RoomDescription, RoomModel};

// Octave bands 125 Hz .. 4 kHz. Absorption from common architectural
// acoustics tables; scattering and transmission are rough typical values.
const TABLE: &[(&str, [f64; 6], [f64; 6], [f64; 6])] = &[
    (
        "concrete",
        [0.01, 0.01, 0.02, 0.02, 0.02, 0.03],
        [0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        [0.001, 0.001, 0.001, 0.001, 0.001, 0.001],
    ),
    (
        "painted_plaster",
        [0.12, 0.09, 0.07, 0.05, 0.05, 0.04],
        [0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        [0.01, 0.01, 0.005, 0.005, 0.005, 0.005],
    ),
    (
        "glass_window",
        [0.35, 0.25, 0.18, 0.12, 0.07, 0.04],
        [0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        [0.10, 0.06, 0.04, 0.03, 0.02, 0.02],
    ),
    (
        "wood_desk",
        [0.15, 0.11, 0.10, 0.07, 0.06, 0.07],
        [0.10, 0.20, 0.30, 0.40, 0.50, 0.50],
        [0.30, 0.20, 0.12, 0.08, 0.05, 0.03],
    ),
    (
        "wood_chair",
        [0.05, 0.05, 0.06, 0.08, 0.10, 0.12],
        [0.20, 0.30, 0.40, 0.50, 0.60, 0.60],
        [0.60, 0.50, 0.40, 0.30, 0.25, 0.20],
    ),
    (
        "wooden_door",
        [0.14, 0.10, 0.06, 0.08, 0.10, 0.10],
        [0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        [0.08, 0.05, 0.03, 0.02, 0.01, 0.01],
    ),
    (
        "carpet",
        [0.02, 0.06, 0.14, 0.37, 0.60, 0.65],
        [0.10, 0.10, 0.15, 0.20, 0.25, 0.30],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ),
    (
        "acoustic_tile",
        [0.50, 0.70, 0.60, 0.70, 0.70, 0.50],
        [0.10, 0.10, 0.15, 0.20, 0.20, 0.20],
        [0.05, 0.04, 0.03, 0.02, 0.02, 0.02],
    ),
    (
        "whiteboard",
        [0.05, 0.04, 0.03, 0.03, 0.03, 0.03],
        [0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        [0.02, 0.01, 0.01, 0.005, 0.005, 0.005],
    ),
];

/// Built-in material table keyed by name.
pub fn default_material_table() -> BTreeMap<String, AcousticMaterial> {
    TABLE
        .iter()
        .map(|(name, a, s, t)| {
            let m = AcousticMaterial {
                name: (*name).to_string(),
                absorption: BandGains::new(*a).expect("table absorption in range"),
                scattering: BandGains::new(*s).expect("table scattering in range"),
                transmission: BandGains::new(*t).expect("table transmission in range"),
            };
            debug_assert!(m.validate().is_ok());
            ((*name).to_string(), m)
        })
        .collect()
}

/// Looks up a built-in material.
pub fn material(name: &str) -> Option<AcousticMaterial> {
    default_material_table().remove(name)
}

/// A furnished 9 x 6 x 3 m classroom: plaster and glass walls, a
/// whiteboard wall, carpet, acoustic ceiling tiles, twelve student desks
/// and a teacher's desk.
pub fn default_classroom() -> RoomModel {
    build_room(&default_classroom_description()).expect("default classroom is valid")
}

/// The description [`default_classroom`] is built from.
pub fn default_classroom_description() -> RoomDescription {
    let walls = [
        ("default", "painted_plaster"),
        ("x_max", "glass_window"),
        ("y_min", "whiteboard"),
        ("floor", "carpet"),
        ("ceiling", "acoustic_tile"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();

    let mut furniture = Vec::new();
    for row in 0..3 {
        for col in 0..4 {
            furniture.push(FurnitureDescription {
                label: Some(format!("desk_r{row}c{col}")),
                center: Vec3::new(1.6 + 1.9 * col as f64, 2.4 + 1.2 * row as f64, 0.375),
                size: Vec3::new(1.2, 0.6, 0.75),
                material: "wood_desk".into(),
            });
        }
    }
    furniture.push(FurnitureDescription {
        label: Some("teacher_desk".into()),
        center: Vec3::new(4.5, 1.0, 0.4),
        size: Vec3::new(1.6, 0.8, 0.8),
        material: "wood_desk".into(),
    });
    RoomDescription {
        dimensions: Vec3::new(9.0, 6.0, 3.0),
        walls,
        materials: BTreeMap::new(),
        furniture,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_materials_conserve_energy() {
        for m in default_material_table().values() {
            m.validate().unwrap();
        }
    }

    #[test]
    fn default_classroom_is_reverberant_but_finite() {
        let rt = super::super::sabine_rt60(&default_classroom()).unwrap();
        for s in rt.seconds {
            assert!(s > 0.2 && s < 1.5, "{s}");
        }
    }
}
