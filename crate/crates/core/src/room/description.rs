use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

use super::{
    default_material_table, AcousticMaterial, BandGains, Face, Furniture, RoomError, RoomModel,
};

/// JSON room description.
///
/// ```json
/// {
///   "dimensions": [9, 6, 3],
///   "walls": {"default": "painted_plaster", "floor": "carpet"},
///   "materials": {"felt": {"absorption": [...], "scattering": [...], "transmission": [...]}},
///   "furniture": [{"center": [2, 2, 0.375], "size": [1.2, 0.6, 0.75], "material": "wood_desk"}]
/// }
/// ```
///
/// Wall keys are `x_min`, `x_max`, `y_min`, `y_max`, `z_min` (`floor`),
/// `z_max` (`ceiling`) or `default`. User materials extend and override the
/// built-in table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomDescription {
    pub dimensions: Vec3,
    pub walls: BTreeMap<String, String>,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialDescription>,
    #[serde(default)]
    pub furniture: Vec<FurnitureDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDescription {
    pub absorption: BandGains,
    #[serde(default = "zero_bands")]
    pub scattering: BandGains,
    #[serde(default = "zero_bands")]
    pub transmission: BandGains,
}

fn zero_bands() -> BandGains {
    BandGains::uniform(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurnitureDescription {
    pub center: Vec3,
    pub size: Vec3,
    pub material: String,
    #[serde(default)]
    pub label: Option<String>,
}

fn parse_face(key: &str) -> Option<Face> {
    serde_json::from_value(serde_json::Value::String(key.to_string())).ok()
}

/// Resolves material names and validates the room.
pub fn build_room(desc: &RoomDescription) -> Result<RoomModel, RoomError> {
    let mut table = default_material_table();
    for (name, m) in &desc.materials {
        let mat = AcousticMaterial::new(name.clone(), m.absorption, m.scattering, m.transmission)?;
        table.insert(name.clone(), mat);
    }
    let lookup = |name: &str| {
        table
            .get(name)
            .cloned()
            .ok_or_else(|| RoomError::UnknownMaterial(name.to_string()))
    };

    let mut walls: [Option<AcousticMaterial>; 6] = Default::default();
    let mut default = None;
    for (key, name) in &desc.walls {
        if key == "default" {
            default = Some(lookup(name)?);
            continue;
        }
        let face = parse_face(key).ok_or_else(|| RoomError::InvalidDimension(format!(
            "unknown wall key `{key}`"
        )))?;
        walls[face.index()] = Some(lookup(name)?);
    }
    let mut resolved = Vec::with_capacity(6);
    for face in Face::ALL {
        let m = walls[face.index()]
            .take()
            .or_else(|| default.clone())
            .ok_or_else(|| RoomError::MissingWall(format!("{face:?}")))?;
        resolved.push(m);
    }
    let walls: [AcousticMaterial; 6] = resolved.try_into().expect("six faces");

    let furniture = desc
        .furniture
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Ok(Furniture {
                label: f.label.clone().unwrap_or_else(|| format!("furniture_{i}")),
                center: f.center,
                size: f.size,
                material: lookup(&f.material)?,
            })
        })
        .collect::<Result<Vec<_>, RoomError>>()?;

    RoomModel::new(desc.dimensions, walls, furniture)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> RoomDescription {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn builds_uniform_room() {
        let d = parse(
            r#"{"dimensions":[9,6,3],"walls":{"default":"flat"},
                "materials":{"flat":{"absorption":[0.3,0.3,0.3,0.3,0.3,0.3]}}}"#,
        );
        let r = build_room(&d).unwrap();
        assert_eq!(r.volume(), 162.0);
        assert_eq!(r.wall(Face::ZMax).absorption, BandGains::uniform(0.3));
    }

    #[test]
    fn face_aliases_and_defaults() {
        let d = parse(
            r#"{"dimensions":[5,4,3],"walls":{"default":"concrete","floor":"carpet","ceiling":"acoustic_tile"}}"#,
        );
        let r = build_room(&d).unwrap();
        assert_eq!(r.wall(Face::ZMin).name, "carpet");
        assert_eq!(r.wall(Face::ZMax).name, "acoustic_tile");
        assert_eq!(r.wall(Face::XMin).name, "concrete");
    }

    #[test]
    fn unknown_material_is_named() {
        let d = parse(r#"{"dimensions":[5,4,3],"walls":{"default":"unobtainium"}}"#);
        assert_eq!(
            build_room(&d).unwrap_err(),
            RoomError::UnknownMaterial("unobtainium".into())
        );
    }

    #[test]
    fn missing_wall_without_default() {
        let d = parse(r#"{"dimensions":[5,4,3],"walls":{"floor":"carpet"}}"#);
        assert!(matches!(build_room(&d), Err(RoomError::MissingWall(_))));
    }

    #[test]
    fn out_of_bounds_furniture() {
        let d = parse(
            r#"{"dimensions":[9,6,3],"walls":{"default":"concrete"},
                "furniture":[{"center":[20,0,0],"size":[1,1,1],"material":"wood_desk"}]}"#,
        );
        assert!(matches!(
            build_room(&d),
            Err(RoomError::FurnitureOutOfBounds { index: 0, .. })
        ));
    }

    #[test]
    fn user_material_energy_checked() {
        let d = parse(
            r#"{"dimensions":[9,6,3],"walls":{"default":"bad"},
                "materials":{"bad":{"absorption":[0.8,0.8,0.8,0.8,0.8,0.8],
                                    "transmission":[0.3,0.3,0.3,0.3,0.3,0.3]}}}"#,
        );
        assert!(matches!(build_room(&d), Err(RoomError::InvalidMaterial { .. })));
    }
}
