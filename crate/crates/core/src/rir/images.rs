use serde::Serialize;

use crate::geometry::Vec3;
use crate::room::{BandGains, Face, RoomModel, NUM_BANDS};

use super::{RirError, SourceSpec};

/// A mirrored copy of the source for one specular reflection path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageSource {
    pub position: Vec3,
    /// Total number of wall reflections.
    pub order: u32,
    /// Lattice index per axis; `|index[a]|` reflections happen on axis `a`.
    pub index: [i32; 3],
    /// Accumulated energy reflection per band.
    pub band_gains: BandGains,
}

impl ImageSource {
    /// Maps a direction leaving this image into the direction it left the
    /// real source, undoing one mirror flip per reflection on each axis.
    pub fn unmirror(&self, direction: Vec3) -> Vec3 {
        let mut d = direction;
        for axis in 0..3 {
            if self.index[axis].rem_euclid(2) == 1 {
                d = d.with_axis(axis, -d.axis(axis));
            }
        }
        d
    }
}

/// Number of lattice images with `|i| + |j| + |k| <= max_order`.
pub fn image_count(max_order: u32) -> usize {
    let n = max_order as usize;
    // Octahedral numbers: (2n + 1)(2n^2 + 2n + 3) / 3.
    (2 * n + 1) * (2 * n * n + 2 * n + 3) / 3
}

/// Coordinate of the image with lattice index `n` along one axis of length
/// `len`, for a source at `x`.
fn image_coordinate(n: i32, len: f64, x: f64) -> f64 {
    if n.rem_euclid(2) == 0 {
        n as f64 * len + x
    } else {
        (n + 1) as f64 * len - x
    }
}

/// Reflections off the (min, max) wall of one axis for lattice index `n`.
fn wall_hits(n: i32) -> (u32, u32) {
    let m = n.unsigned_abs();
    let (near, far) = (m.div_ceil(2), m / 2);
    if n >= 0 {
        (far, near)
    } else {
        (near, far)
    }
}

/// Enumerates every shoebox image source up to `max_order` reflections, in
/// lexicographic `(i, j, k)` order.
///
/// Each reflection off a face multiplies the band gains by
/// `(1 - absorption) * (1 - scattering * scattering_loss)`.
pub fn image_sources(
    room: &RoomModel,
    source: &SourceSpec,
    max_order: u32,
    scattering_loss: f64,
) -> Result<Vec<ImageSource>, RirError> {
    if !room.contains(source.position) {
        return Err(RirError::SourceOutsideRoom(source.position.to_array()));
    }
    let dims = room.dimensions();
    let reflection: [[f64; NUM_BANDS]; 6] = std::array::from_fn(|f| {
        let m = &room.walls()[f];
        std::array::from_fn(|b| {
            (1.0 - m.absorption.get(b)) * (1.0 - m.scattering.get(b) * scattering_loss)
        })
    });

    let n = max_order as i32;
    let mut out = Vec::with_capacity(image_count(max_order));
    for i in -n..=n {
        let rem_i = n - i.abs();
        for j in -rem_i..=rem_i {
            let rem_j = rem_i - j.abs();
            for k in -rem_j..=rem_j {
                let index = [i, j, k];
                let mut gains = [1.0; NUM_BANDS];
                let mut position = source.position;
                for (axis, &idx) in index.iter().enumerate() {
                    position = position.with_axis(
                        axis,
                        image_coordinate(idx, dims.axis(axis), source.position.axis(axis)),
                    );
                    let (min_hits, max_hits) = wall_hits(idx);
                    for (face, hits) in [
                        (Face::of(axis, false), min_hits),
                        (Face::of(axis, true), max_hits),
                    ] {
                        for _ in 0..hits {
                            for (g, r) in gains.iter_mut().zip(&reflection[face.index()]) {
                                *g *= r;
                            }
                        }
                    }
                }
                out.push(ImageSource {
                    position,
                    order: index.iter().map(|v| v.unsigned_abs()).sum(),
                    index,
                    band_gains: BandGains::new(gains).expect("products of [0,1] factors"),
                });
            }
        }
    }
    Ok(out)
}
