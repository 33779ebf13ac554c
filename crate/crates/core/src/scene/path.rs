use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::room::RoomModel;

use super::SceneError;

/// Polyline walked by the listener at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListenerPath {
    pub waypoints: Vec<Vec3>,
    /// Meters per second.
    pub speed: f64,
    /// Wrap back to the first waypoint instead of stopping at the last.
    #[serde(rename = "loop", default)]
    pub looped: bool,
}

impl ListenerPath {
    pub fn stationary(at: Vec3) -> Self {
        Self {
            waypoints: vec![at],
            speed: 0.0,
            looped: false,
        }
    }

    /// A loop around the room 1.5 m in from the walls (or half way in, for
    /// small rooms) at ear height.
    pub fn default_for(room: &RoomModel) -> Self {
        let d = room.dimensions();
        let ix = (d.x / 2.0).min(1.5);
        let iy = (d.y / 2.0).min(1.5);
        let z = (d.z / 2.0).min(1.2);
        Self {
            waypoints: vec![
                Vec3::new(ix, iy, z),
                Vec3::new(d.x - ix, iy, z),
                Vec3::new(d.x - ix, d.y - iy, z),
                Vec3::new(ix, d.y - iy, z),
            ],
            speed: 0.5,
            looped: true,
        }
    }

    pub fn validate(&self, room: &RoomModel) -> Result<(), SceneError> {
        if self.waypoints.is_empty() {
            return Err(SceneError::InvalidConfig("listener path has no waypoints".into()));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(SceneError::InvalidConfig(format!(
                "listener speed {} must be >= 0",
                self.speed
            )));
        }
        if let Some(p) = self.waypoints.iter().find(|p| !room.contains(**p)) {
            return Err(SceneError::InvalidConfig(format!(
                "listener waypoint {:?} lies outside the room",
                p.to_array()
            )));
        }
        Ok(())
    }
}

/// Listener location after walking `path` for `t` seconds.
pub fn listener_position(path: &ListenerPath, t: f64) -> Vec3 {
    let pts = &path.waypoints;
    let first = pts[0];
    let mut segments: Vec<(Vec3, Vec3)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    if path.looped && pts.len() > 1 {
        segments.push((pts[pts.len() - 1], first));
    }
    let total: f64 = segments.iter().map(|(a, b)| a.distance(*b)).sum();
    if total == 0.0 || path.speed == 0.0 || t <= 0.0 {
        return first;
    }
    let mut s = path.speed * t;
    if path.looped {
        s %= total;
    } else if s >= total {
        return pts[pts.len() - 1];
    }
    for (a, b) in segments {
        let len = a.distance(b);
        if s < len {
            return a.lerp(b, s / len);
        }
        s -= len;
    }
    segments_end(pts, path.looped)
}

fn segments_end(pts: &[Vec3], looped: bool) -> Vec3 {
    if looped {
        pts[0]
    } else {
        pts[pts.len() - 1]
    }
}
