use crate::geometry::Vec3;
use crate::room::{BandGains, RoomModel};

use super::{RirError, SourceSpec};

/// Per-band transmission through every furniture box the segment `a -> b`
/// touches. Unobstructed paths return unity in every band.
pub fn occlusion_factor(room: &RoomModel, a: Vec3, b: Vec3) -> Result<BandGains, RirError> {
    if a == b {
        return Err(RirError::DegenerateSegment(a.to_array()));
    }
    Ok(room
        .furniture()
        .iter()
        .filter(|f| f.bounds().intersects_segment(a, b))
        .fold(BandGains::ones(), |acc, f| acc.product(&f.material.transmission)))
}

/// Cardioid-family gain `alpha + (1 - alpha) cos(theta)`, floored at zero.
pub fn directivity_gain(source: &SourceSpec, toward: Vec3) -> Result<f64, RirError> {
    let dir = (toward - source.position)
        .normalized()
        .ok_or(RirError::DegenerateDirection)?;
    Ok(gain_for_direction(source, dir))
}

/// Same as [`directivity_gain`] for a unit emission direction.
pub(crate) fn gain_for_direction(source: &SourceSpec, unit_dir: Vec3) -> f64 {
    let alpha = source.directivity_alpha;
    if alpha >= 1.0 {
        return 1.0;
    }
    let cos = unit_dir.dot(source.orientation).clamp(-1.0, 1.0);
    (alpha + (1.0 - alpha) * cos).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::room::{AcousticMaterial, Furniture};

    fn room_with(boxes: &[(f64, f64)]) -> RoomModel {
        let mut r = RoomModel::uniform(
            Vec3::new(10.0, 6.0, 3.0),
            AcousticMaterial::uniform("m", 0.2),
        )
        .unwrap();
        for (i, &(x, t)) in boxes.iter().enumerate() {
            let m = AcousticMaterial::new(
                "blocker",
                BandGains::uniform(0.1),
                BandGains::uniform(0.0),
                BandGains::uniform(t),
            )
            .unwrap();
            r = r
                .with_furniture(Furniture {
                    label: format!("b{i}"),
                    center: Vec3::new(x, 3.0, 1.5),
                    size: Vec3::new(0.5, 1.0, 1.0),
                    material: m,
                })
                .unwrap();
        }
        r
    }

    #[test]
    fn unobstructed_is_unity() {
        let r = room_with(&[]);
        let g = occlusion_factor(&r, Vec3::new(1.0, 1.0, 1.0), Vec3::new(9.0, 5.0, 2.0)).unwrap();
        assert_eq!(g, BandGains::ones());
    }

    #[test]
    fn single_and_double_blockers() {
        let a = Vec3::new(0.5, 3.0, 1.5);
        let b = Vec3::new(9.5, 3.0, 1.5);
        let g = occlusion_factor(&room_with(&[(5.0, 0.1)]), a, b).unwrap();
        assert!(g.values().iter().all(|&v| (v - 0.1).abs() < 1e-15));
        let g = occlusion_factor(&room_with(&[(3.0, 0.5), (7.0, 0.5)]), a, b).unwrap();
        assert!(g.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn degenerate_segment() {
        let p = Vec3::new(1.0, 1.0, 1.0);
        assert!(matches!(
            occlusion_factor(&room_with(&[]), p, p),
            Err(RirError::DegenerateSegment(_))
        ));
    }

    #[test]
    fn cardioid_front_and_null() {
        let s = SourceSpec {
            position: Vec3::new(1.0, 1.0, 1.0),
            orientation: Vec3::new(1.0, 0.0, 0.0),
            directivity_alpha: 0.5,
            gain: 1.0,
        };
        assert_eq!(directivity_gain(&s, Vec3::new(3.0, 1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(directivity_gain(&s, Vec3::new(-3.0, 1.0, 1.0)).unwrap(), 0.0);
        let side = directivity_gain(&s, Vec3::new(1.0, 4.0, 1.0)).unwrap();
        assert!((side - 0.5).abs() < 1e-15);
        let omni = SourceSpec {
            directivity_alpha: 1.0,
            ..s
        };
        for t in [Vec3::new(-3.0, 1.0, 1.0), Vec3::new(1.0, 1.0, 9.0)] {
            assert_eq!(directivity_gain(&omni, t).unwrap(), 1.0);
        }
        assert!(matches!(
            directivity_gain(&s, s.position),
            Err(RirError::DegenerateDirection)
        ));
    }

    #[test]
    fn figure_eight_rear_clamped() {
        let s = SourceSpec {
            position: Vec3::new(1.0, 1.0, 1.0),
            orientation: Vec3::new(0.0, 1.0, 0.0),
            directivity_alpha: 0.0,
            gain: 1.0,
        };
        assert_eq!(directivity_gain(&s, Vec3::new(1.0, -2.0, 1.0)).unwrap(), 0.0);
    }
}
