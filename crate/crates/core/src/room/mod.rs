//! Shoebox classroom geometry with banded acoustic materials.

mod description;
mod materials;

pub use description::{build_room, FurnitureDescription, MaterialDescription, RoomDescription};
pub use materials::{
    default_classroom, default_classroom_description, default_material_table, material,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

/// Octave-band centers (Hz) used by every banded quantity.
pub const BAND_CENTERS_HZ: [f64; 6] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];
pub const NUM_BANDS: usize = 6;

/// Sabine constant in s/m.
const SABINE_CONSTANT: f64 = 0.161;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoomError {
    #[error("invalid room dimension: {0}")]
    InvalidDimension(String),
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("furniture #{index} ({label}) lies outside the room")]
    FurnitureOutOfBounds { index: usize, label: String },
    #[error("invalid material `{name}`: {detail}")]
    InvalidMaterial { name: String, detail: String },
    #[error("no material assigned to wall `{0}`")]
    MissingWall(String),
    #[error("zero total absorption in band(s) {bands:?}; RT60 is unbounded")]
    ZeroAbsorption { bands: Vec<usize> },
}

/// Per-octave-band coefficients, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BandGains([f64; NUM_BANDS]);

impl BandGains {
    pub fn new(values: [f64; NUM_BANDS]) -> Result<Self, String> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(format!("band {i} value {v} outside [0, 1]"));
        }
        Ok(Self(values))
    }

    pub fn uniform(v: f64) -> Self {
        Self([v.clamp(0.0, 1.0); NUM_BANDS])
    }

    pub fn ones() -> Self {
        Self([1.0; NUM_BANDS])
    }

    pub fn values(&self) -> &[f64; NUM_BANDS] {
        &self.0
    }

    pub fn get(&self, band: usize) -> f64 {
        self.0[band]
    }

    /// Band-wise product.
    pub fn product(&self, other: &Self) -> Self {
        Self(std::array::from_fn(|b| self.0[b] * other.0[b]))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(std::array::from_fn(|b| f(self.0[b]).clamp(0.0, 1.0)))
    }
}

impl TryFrom<Vec<f64>> for BandGains {
    type Error = String;
    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        let arr: [f64; NUM_BANDS] = v
            .try_into()
            .map_err(|v: Vec<f64>| format!("expected {NUM_BANDS} band values, got {}", v.len()))?;
        Self::new(arr)
    }
}

impl From<BandGains> for Vec<f64> {
    fn from(b: BandGains) -> Self {
        b.0.to_vec()
    }
}

/// Energy fractions absorbed, scattered and transmitted at a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticMaterial {
    pub name: String,
    pub absorption: BandGains,
    pub scattering: BandGains,
    pub transmission: BandGains,
}

impl AcousticMaterial {
    pub fn new(
        name: impl Into<String>,
        absorption: BandGains,
        scattering: BandGains,
        transmission: BandGains,
    ) -> Result<Self, RoomError> {
        let m = Self {
            name: name.into(),
            absorption,
            scattering,
            transmission,
        };
        m.validate()?;
        Ok(m)
    }

    /// Uniform absorption in every band, no scattering or transmission.
    pub fn uniform(name: impl Into<String>, absorption: f64) -> Self {
        Self {
            name: name.into(),
            absorption: BandGains::uniform(absorption),
            scattering: BandGains::uniform(0.0),
            transmission: BandGains::uniform(0.0),
        }
    }

    pub fn validate(&self) -> Result<(), RoomError> {
        for b in 0..NUM_BANDS {
            let total = self.absorption.get(b) + self.transmission.get(b);
            if total > 1.0 + 1e-12 {
                return Err(RoomError::InvalidMaterial {
                    name: self.name.clone(),
                    detail: format!(
                        "absorption + transmission = {total} exceeds 1 in band {b} ({} Hz)",
                        BAND_CENTERS_HZ[b]
                    ),
                });
            }
        }
        Ok(())
    }
}

/// The six shoebox faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    #[serde(alias = "floor")]
    ZMin,
    #[serde(alias = "ceiling")]
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XMin,
        Face::XMax,
        Face::YMin,
        Face::YMax,
        Face::ZMin,
        Face::ZMax,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> usize {
        self.index() / 2
    }

    pub fn is_max(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn of(axis: usize, max: bool) -> Face {
        Face::ALL[axis * 2 + max as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Furniture {
    pub label: String,
    pub center: Vec3,
    pub size: Vec3,
    pub material: AcousticMaterial,
}

impl Furniture {
    pub fn bounds(&self) -> Aabb {
        Aabb::from_center_size(self.center, self.size)
    }
}

/// A validated shoebox room spanning `[0, Lx] x [0, Ly] x [0, Lz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomModel {
    dimensions: Vec3,
    walls: [AcousticMaterial; 6],
    furniture: Vec<Furniture>,
}

impl RoomModel {
    pub fn new(
        dimensions: Vec3,
        walls: [AcousticMaterial; 6],
        furniture: Vec<Furniture>,
    ) -> Result<Self, RoomError> {
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            let v = dimensions.axis(axis);
            if !(v.is_finite() && v > 0.0) {
                return Err(RoomError::InvalidDimension(format!("L{name} = {v}")));
            }
        }
        for w in &walls {
            w.validate()?;
        }
        let room = Aabb {
            min: Vec3::default(),
            max: dimensions,
        };
        for (index, f) in furniture.iter().enumerate() {
            f.material.validate()?;
            let size_ok = (0..3).all(|i| f.size.axis(i).is_finite() && f.size.axis(i) > 0.0);
            if !size_ok {
                return Err(RoomError::InvalidDimension(format!(
                    "furniture #{index} has non-positive size"
                )));
            }
            let b = f.bounds();
            let eps = 1e-9;
            let inside = (0..3).all(|i| {
                b.min.axis(i) >= room.min.axis(i) - eps && b.max.axis(i) <= room.max.axis(i) + eps
            });
            if !inside {
                return Err(RoomError::FurnitureOutOfBounds {
                    index,
                    label: f.label.clone(),
                });
            }
        }
        Ok(Self {
            dimensions,
            walls,
            furniture,
        })
    }

    /// Empty room with the same material on every face.
    pub fn uniform(dimensions: Vec3, material: AcousticMaterial) -> Result<Self, RoomError> {
        Self::new(dimensions, std::array::from_fn(|_| material.clone()), Vec::new())
    }

    pub fn dimensions(&self) -> Vec3 {
        self.dimensions
    }

    pub fn wall(&self, face: Face) -> &AcousticMaterial {
        &self.walls[face.index()]
    }

    pub fn walls(&self) -> &[AcousticMaterial; 6] {
        &self.walls
    }

    pub fn furniture(&self) -> &[Furniture] {
        &self.furniture
    }

    pub fn with_furniture(mut self, f: Furniture) -> Result<Self, RoomError> {
        self.furniture.push(f);
        Self::new(self.dimensions, self.walls, self.furniture)
    }

    pub fn volume(&self) -> f64 {
        let d = self.dimensions;
        d.x * d.y * d.z
    }

    pub fn face_area(&self, face: Face) -> f64 {
        let d = self.dimensions.to_array();
        let axis = face.axis();
        d[(axis + 1) % 3] * d[(axis + 2) % 3]
    }

    pub fn surface_area(&self) -> f64 {
        let d = self.dimensions;
        2.0 * (d.x * d.y + d.x * d.z + d.y * d.z)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: Vec3::default(),
            max: self.dimensions,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.is_finite() && self.bounds().contains(p)
    }

    /// Whether `p` is inside the room and outside every furniture box.
    pub fn is_free(&self, p: Vec3) -> bool {
        self.contains(p) && !self.furniture.iter().any(|f| f.bounds().contains(p))
    }

    /// Total absorption area (m^2 sabins) per band: wall faces plus the
    /// exposed faces of every furniture box. Box faces flush with a room
    /// boundary are not exposed.
    pub fn absorption_area(&self) -> [f64; NUM_BANDS] {
        let mut area = [0.0; NUM_BANDS];
        for face in Face::ALL {
            let s = self.face_area(face);
            for (b, a) in area.iter_mut().enumerate() {
                *a += s * self.wall(face).absorption.get(b);
            }
        }
        for f in &self.furniture {
            let exposed = self.exposed_area(f);
            for (b, a) in area.iter_mut().enumerate() {
                *a += exposed * f.material.absorption.get(b);
            }
        }
        area
    }

    fn exposed_area(&self, f: &Furniture) -> f64 {
        let bounds = f.bounds();
        let size = f.size.to_array();
        let mut total = 0.0;
        for face in Face::ALL {
            let axis = face.axis();
            let plane = if face.is_max() {
                bounds.max.axis(axis)
            } else {
                bounds.min.axis(axis)
            };
            let wall = if face.is_max() {
                self.dimensions.axis(axis)
            } else {
                0.0
            };
            if (plane - wall).abs() < 1e-9 {
                continue;
            }
            total += size[(axis + 1) % 3] * size[(axis + 2) % 3];
        }
        total
    }
}

/// Per-band Sabine reverberation times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRt60 {
    /// Seconds per band; `f64::INFINITY` where the band has no absorption.
    pub seconds: [f64; NUM_BANDS],
}

impl BandRt60 {
    pub fn unbounded_bands(&self) -> Vec<usize> {
        (0..NUM_BANDS)
            .filter(|&b| self.seconds[b].is_infinite())
            .collect()
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.seconds
            .iter()
            .copied()
            .filter(|s| s.is_finite())
            .reduce(f64::max)
    }
}

/// Sabine RT60 = 0.161 V / A per band.
///
/// Bands without absorption are reported as infinite; if every band is
/// unabsorbed the call fails with [`RoomError::ZeroAbsorption`].
pub fn sabine_rt60(room: &RoomModel) -> Result<BandRt60, RoomError> {
    let area = room.absorption_area();
    let volume = room.volume();
    let seconds = area.map(|a| {
        if a > 0.0 {
            SABINE_CONSTANT * volume / a
        } else {
            f64::INFINITY
        }
    });
    let rt = BandRt60 { seconds };
    let unbounded = rt.unbounded_bands();
    if unbounded.len() == NUM_BANDS {
        return Err(RoomError::ZeroAbsorption { bands: unbounded });
    }
    Ok(rt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn box_room(absorption: f64) -> RoomModel {
        RoomModel::uniform(
            Vec3::new(9.0, 6.0, 3.0),
            AcousticMaterial::uniform("test", absorption),
        )
        .unwrap()
    }

    #[test]
    fn classroom_volume() {
        let r = box_room(0.3);
        assert_eq!(r.volume(), 162.0);
        assert_eq!(r.surface_area(), 198.0);
    }

    #[test]
    fn sabine_hand_values() {
        let rt = sabine_rt60(&box_room(0.3)).unwrap();
        for s in rt.seconds {
            // 0.161 * 162 / 59.4
            assert!((s - 0.439_090_909_090_909).abs() < 1e-12);
        }
        let rt = sabine_rt60(&box_room(1.0)).unwrap();
        for s in rt.seconds {
            // 0.161 * 162 / 198
            assert!((s - 0.131_727_272_727_272_73).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_absorption_band_flagged() {
        let mut absorption = [0.3; 6];
        absorption[0] = 0.0;
        let m = AcousticMaterial::new(
            "no_bass",
            BandGains::new(absorption).unwrap(),
            BandGains::uniform(0.0),
            BandGains::uniform(0.0),
        )
        .unwrap();
        let room = RoomModel::uniform(Vec3::new(9.0, 6.0, 3.0), m).unwrap();
        let rt = sabine_rt60(&room).unwrap();
        assert_eq!(rt.unbounded_bands(), vec![0]);
        assert!(matches!(
            sabine_rt60(&box_room(0.0)),
            Err(RoomError::ZeroAbsorption { bands }) if bands.len() == 6
        ));
    }

    #[test]
    fn energy_constraint_enforced() {
        let err = AcousticMaterial::new(
            "leaky",
            BandGains::uniform(0.8),
            BandGains::uniform(0.0),
            BandGains::uniform(0.3),
        )
        .unwrap_err();
        assert!(matches!(err, RoomError::InvalidMaterial { .. }));
    }

    #[test]
    fn band_gains_reject_out_of_range_and_wrong_length() {
        assert!(BandGains::new([0.0, 0.1, 0.2, 1.2, 0.0, 0.0]).is_err());
        assert!(serde_json::from_str::<BandGains>("[0.1,0.2]").is_err());
        assert!(serde_json::from_str::<BandGains>("[0.1,0.2,0.3,0.4,0.5,0.6]").is_ok());
    }

    #[test]
    fn furniture_bounds_checked() {
        let wood = AcousticMaterial::uniform("wood", 0.1);
        let out = Furniture {
            label: "desk".into(),
            center: Vec3::new(20.0, 0.0, 0.0),
            size: Vec3::new(1.0, 1.0, 1.0),
            material: wood.clone(),
        };
        assert!(matches!(
            box_room(0.3).with_furniture(out),
            Err(RoomError::FurnitureOutOfBounds { index: 0, .. })
        ));
        let on_floor = Furniture {
            label: "desk".into(),
            center: Vec3::new(4.5, 3.0, 0.375),
            size: Vec3::new(1.2, 0.6, 0.75),
            material: wood,
        };
        let r = box_room(0.3).with_furniture(on_floor).unwrap();
        // Bottom face rests on the floor: 2 * (1.2*0.75 + 0.6*0.75) + 1.2*0.6
        let expected = 2.0 * (1.2 * 0.75 + 0.6 * 0.75) + 1.2 * 0.6;
        let a = r.absorption_area();
        assert!((a[0] - (59.4 + 0.1 * expected)).abs() < 1e-9);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(matches!(
            RoomModel::uniform(Vec3::new(9.0, 0.0, 3.0), AcousticMaterial::uniform("m", 0.2)),
            Err(RoomError::InvalidDimension(_))
        ));
    }

    proptest! {
        #[test]
        fn surface_area_formula(x in 0.5f64..30.0, y in 0.5f64..30.0, z in 0.5f64..10.0) {
            let r = RoomModel::uniform(Vec3::new(x, y, z), AcousticMaterial::uniform("m", 0.2)).unwrap();
            let faces: f64 = Face::ALL.iter().map(|&f| r.face_area(f)).sum();
            prop_assert_eq!(r.surface_area(), 2.0 * (x * y + x * z + y * z));
            prop_assert!((faces - r.surface_area()).abs() < 1e-9);
        }

        #[test]
        fn doubling_absorption_never_lengthens_rt60(alpha in prop::array::uniform6(0.01f64..1.0)) {
            let base = AcousticMaterial::new("a", BandGains::new(alpha).unwrap(), BandGains::uniform(0.0), BandGains::uniform(0.0)).unwrap();
            let doubled = AcousticMaterial::new("b", BandGains::new(alpha.map(|a| (2.0 * a).min(1.0))).unwrap(), BandGains::uniform(0.0), BandGains::uniform(0.0)).unwrap();
            let d = Vec3::new(8.0, 7.0, 3.0);
            let r1 = sabine_rt60(&RoomModel::uniform(d, base).unwrap()).unwrap();
            let r2 = sabine_rt60(&RoomModel::uniform(d, doubled).unwrap()).unwrap();
            for b in 0..NUM_BANDS {
                prop_assert!(r2.seconds[b] <= r1.seconds[b]);
            }
        }

        #[test]
        fn adding_furniture_never_lengthens_rt60(
            cx in 1.0f64..8.0, cy in 1.0f64..5.0, sx in 0.1f64..1.8, sy in 0.1f64..1.8, sz in 0.1f64..2.0,
            alpha in 0.0f64..1.0,
        ) {
            let room = box_room(0.25);
            let f = Furniture {
                label: "box".into(),
                center: Vec3::new(cx, cy, sz / 2.0),
                size: Vec3::new(sx, sy, sz),
                material: AcousticMaterial::uniform("f", alpha),
            };
            let before = sabine_rt60(&room).unwrap();
            let after = sabine_rt60(&room.with_furniture(f).unwrap()).unwrap();
            for b in 0..NUM_BANDS {
                prop_assert!(after.seconds[b] <= before.seconds[b]);
            }
        }
    }
}
