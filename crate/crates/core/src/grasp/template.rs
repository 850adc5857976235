//! Parallel-jaw hand stamps.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::GraspError;
use crate::grid::Mask;

/// Hand footprint seen from above, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandGeometry {
    /// Inner distance between the open fingers.
    pub open_width_px: f64,
    /// Finger extent across the closing direction.
    pub finger_w_px: f64,
    /// Finger thickness along the closing direction.
    pub finger_h_px: f64,
}

impl Default for HandGeometry {
    fn default() -> Self {
        Self {
            open_width_px: 60.0,
            finger_w_px: 15.0,
            finger_h_px: 10.0,
        }
    }
}

impl HandGeometry {
    fn validate(&self) -> Result<(), GraspError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.open_width_px) && ok(self.finger_w_px) && ok(self.finger_h_px) {
            Ok(())
        } else {
            Err(GraspError::InvalidGeometry(format!(
                "hand dimensions must be positive, got {self:?}"
            )))
        }
    }
}

/// A set of pixel offsets, also kept as horizontal runs `(dy, dx_first, dx_last)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub offsets: Vec<(i32, i32)>,
    pub runs: Vec<(i32, i32, i32)>,
}

impl Stamp {
    fn from_offsets(offsets: Vec<(i32, i32)>) -> Self {
        // Offsets arrive in raster order, so each row's members are contiguous.
        let mut runs: Vec<(i32, i32, i32)> = Vec::new();
        for &(dx, dy) in &offsets {
            match runs.last_mut() {
                Some(r) if r.0 == dy && r.2 + 1 == dx => r.2 = dx,
                _ => runs.push((dy, dx, dx)),
            }
        }
        Self { offsets, runs }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Contact and collision stamps of one hand orientation, centered on the grasp point.
///
/// The contact region is the space swept between the closing fingers; the
/// collision region is the footprint of the two open fingers.
#[derive(Debug, Clone, PartialEq)]
pub struct HandTemplate {
    pub rotation_index: usize,
    pub angle_deg: f64,
    pub geometry: HandGeometry,
    /// Stamp masks span `[-half_extent, half_extent]` on both axes.
    pub half_extent: usize,
    pub contact: Stamp,
    pub collision: Stamp,
}

/// `(cos, sin)` of an angle in degrees; multiples of 45° are exact, and the
/// result for `θ + 90°` is exactly the quarter-turn of the result for `θ`.
pub fn unit_direction(deg: f64) -> (f64, f64) {
    let turns = (deg / 90.0).floor();
    let rest = deg - turns * 90.0;
    let (c, s) = if rest == 0.0 {
        (1.0, 0.0)
    } else if rest == 45.0 {
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    } else {
        let r = rest.to_radians();
        (r.cos(), r.sin())
    };
    match (turns as i64).rem_euclid(4) {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

impl HandTemplate {
    pub fn new(geometry: HandGeometry, rotation_index: usize, angle_deg: f64) -> Result<Self, GraspError> {
        geometry.validate()?;
        let half_open = geometry.open_width_px / 2.0;
        let half_w = geometry.finger_w_px / 2.0;
        let outer = half_open + geometry.finger_h_px;
        let half_extent = (outer.hypot(half_w)).ceil() as usize + 1;
        let (c, s) = unit_direction(angle_deg);
        let e = half_extent as i32;
        let (mut contact, mut collision) = (Vec::new(), Vec::new());
        for dy in -e..=e {
            for dx in -e..=e {
                let (fx, fy) = (dx as f64, dy as f64);
                let u = (fx * c + fy * s).abs();
                let v = (fy * c - fx * s).abs();
                if v > half_w {
                    continue;
                }
                if u < half_open {
                    contact.push((dx, dy));
                } else if u <= outer {
                    collision.push((dx, dy));
                }
            }
        }
        Ok(Self {
            rotation_index,
            angle_deg,
            geometry,
            half_extent,
            contact: Stamp::from_offsets(contact),
            collision: Stamp::from_offsets(collision),
        })
    }

    /// Unit vector along which the fingers close, image axes.
    pub fn closing_axis(&self) -> (f64, f64) {
        unit_direction(self.angle_deg)
    }

    fn stamp_mask(&self, stamp: &Stamp) -> Mask {
        let side = 2 * self.half_extent + 1;
        let mut m = Mask::new(side, side, false);
        let e = self.half_extent as i32;
        for &(dx, dy) in &stamp.offsets {
            m[((dx + e) as usize, (dy + e) as usize)] = true;
        }
        m
    }

    pub fn contact_mask(&self) -> Mask {
        self.stamp_mask(&self.contact)
    }

    pub fn collision_mask(&self) -> Mask {
        self.stamp_mask(&self.collision)
    }
}

/// `rotations` templates at `k·180°/rotations`.
pub fn build_templates(geometry: HandGeometry, rotations: usize) -> Result<Vec<HandTemplate>, GraspError> {
    if rotations == 0 {
        return Err(GraspError::InvalidGeometry("at least one rotation is required".into()));
    }
    (0..rotations)
        .map(|k| HandTemplate::new(geometry, k, k as f64 * 180.0 / rotations as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_rotations() {
        let t = build_templates(HandGeometry::default(), 4).unwrap();
        let angles: Vec<f64> = t.iter().map(|t| t.angle_deg).collect();
        assert_eq!(angles, vec![0.0, 45.0, 90.0, 135.0]);
        let one = build_templates(HandGeometry::default(), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].angle_deg, 0.0);
    }

    #[test]
    fn masks_are_disjoint_and_point_symmetric() {
        for t in build_templates(HandGeometry::default(), 6).unwrap() {
            let (c, k) = (t.contact_mask(), t.collision_mask());
            let side = c.width();
            for (x, y, &v) in c.iter_xy() {
                assert!(!(v && k[(x, y)]));
                assert_eq!(v, c[(side - 1 - x, side - 1 - y)]);
                assert_eq!(k[(x, y)], k[(side - 1 - x, side - 1 - y)]);
            }
            assert!(!t.contact.is_empty() && !t.collision.is_empty());
        }
    }

    #[test]
    fn axis_aligned_footprint_sizes() {
        let t = HandTemplate::new(HandGeometry::default(), 0, 0.0).unwrap();
        // |dx| < 30 → 59 columns, |dy| ≤ 7.5 → 15 rows.
        assert_eq!(t.contact.len(), 59 * 15);
        // 30 ≤ |dx| ≤ 40 → 2 × 11 columns.
        assert_eq!(t.collision.len(), 22 * 15);
        assert_eq!(t.contact.runs.len(), 15);
    }

    #[test]
    fn quarter_turn_is_exact() {
        let a = HandTemplate::new(HandGeometry::default(), 0, 45.0).unwrap();
        let b = HandTemplate::new(HandGeometry::default(), 1, 135.0).unwrap();
        let mut rotated: Vec<(i32, i32)> = a.contact.offsets.iter().map(|&(x, y)| (-y, x)).collect();
        rotated.sort_by_key(|&(x, y)| (y, x));
        assert_eq!(rotated, b.contact.offsets);
    }

    #[test]
    fn unit_directions() {
        assert_eq!(unit_direction(90.0), (0.0, 1.0));
        assert_eq!(unit_direction(180.0), (-1.0, 0.0));
        let (c, s) = unit_direction(135.0);
        assert_eq!((c, s), (-FRAC_1_SQRT_2, FRAC_1_SQRT_2));
        let (c, s) = unit_direction(30.0);
        assert!((c - 30f64.to_radians().cos()).abs() < 1e-15 && (s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bad_geometry() {
        let g = HandGeometry {
            finger_w_px: 0.0,
            ..HandGeometry::default()
        };
        assert!(build_templates(g, 4).is_err());
        assert!(build_templates(HandGeometry::default(), 0).is_err());
    }
}
