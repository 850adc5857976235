//! C- and S-shaped wire parts.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartShape {
    C,
    S,
}

impl PartShape {
    pub fn name(self) -> &'static str {
        match self {
            PartShape::C => "C",
            PartShape::S => "S",
        }
    }
}

/// Shape parameters. A C part uses only the first arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartParams {
    /// Radius of the first arc (the loop other parts can thread), mm.
    pub radius_mm: f64,
    pub arc_deg: f64,
    /// Second arc of an S part, curving the other way.
    pub second_radius_mm: f64,
    pub second_arc_deg: f64,
    pub wire_radius_mm: f64,
    /// Target spacing between centerline samples, mm.
    pub spacing_mm: f64,
    /// Relative random variation applied to both radii.
    pub radius_jitter: f64,
}

impl PartParams {
    pub fn c_default() -> Self {
        Self {
            radius_mm: 40.0,
            arc_deg: 300.0,
            second_radius_mm: 0.0,
            second_arc_deg: 0.0,
            wire_radius_mm: 5.0,
            spacing_mm: 2.0,
            radius_jitter: 0.1,
        }
    }

    pub fn s_default() -> Self {
        Self {
            radius_mm: 30.0,
            arc_deg: 250.0,
            second_radius_mm: 30.0,
            second_arc_deg: 200.0,
            ..Self::c_default()
        }
    }

    fn validate(&self, shape: PartShape) -> Result<(), SceneError> {
        let bad = |what: &str| Err(SceneError::InvalidParams(what.to_string()));
        if !(self.radius_mm > 0.0) {
            return bad("radius must be positive");
        }
        if !(self.arc_deg > 0.0 && self.arc_deg <= 360.0) {
            return bad("arc angle must be in (0, 360]");
        }
        if !(self.wire_radius_mm > 0.0 && self.wire_radius_mm < self.radius_mm) {
            return bad("wire radius must be positive and below the arc radius");
        }
        if !(self.spacing_mm > 0.0) {
            return bad("spacing must be positive");
        }
        if !(0.0..0.5).contains(&self.radius_jitter) {
            return bad("radius jitter must be in [0, 0.5)");
        }
        if shape == PartShape::S {
            if !(0.0..=360.0).contains(&self.second_arc_deg) {
                return bad("second arc angle must be in [0, 360]");
            }
            if self.second_arc_deg > 0.0 && !(self.second_radius_mm > self.wire_radius_mm) {
                return bad("second radius must exceed the wire radius");
            }
        }
        Ok(())
    }
}

/// A bent wire: centerline in the part's own frame plus its pose in the scene.
///
/// The local frame puts the first arc's center at the origin in the `z = 0`
/// plane, with the opening of that arc centered on the `+x` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePart {
    pub shape: PartShape,
    pub local: Vec<Vector3<f64>>,
    pub wire_radius: f64,
    /// Radius of the first arc.
    pub loop_radius: f64,
    pub pose: Isometry3<f64>,
}

impl WirePart {
    /// Centerline in scene coordinates (z up, floor at z = 0).
    pub fn centerline(&self) -> Vec<Vector3<f64>> {
        self.centerline_with(&self.pose)
    }

    pub fn centerline_with(&self, pose: &Isometry3<f64>) -> Vec<Vector3<f64>> {
        self.local
            .iter()
            .map(|p| (pose * Point3::from(*p)).coords)
            .collect()
    }

    pub fn with_pose(&self, pose: Isometry3<f64>) -> Self {
        Self {
            pose,
            ..self.clone()
        }
    }

    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.local)
    }
}

pub fn polyline_length(points: &[Vector3<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Builds a part with the given shape. `seed` drives the radius jitter only.
pub fn make_part(shape: PartShape, params: &PartParams, seed: u64) -> Result<WirePart, SceneError> {
    params.validate(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = || {
        if params.radius_jitter > 0.0 {
            1.0 + rng.random_range(-params.radius_jitter..=params.radius_jitter)
        } else {
            1.0
        }
    };
    let r1 = params.radius_mm * jitter();
    let r2 = params.second_radius_mm * jitter();
    let a1 = params.arc_deg.to_radians();
    let a2 = match shape {
        PartShape::C => 0.0,
        PartShape::S => params.second_arc_deg.to_radians(),
    };
    let local = two_arc_curve(r1, a1, r2, a2, params.spacing_mm);
    if params.wire_radius_mm >= r1 {
        return Err(SceneError::InvalidParams(
            "wire radius exceeds the jittered arc radius".into(),
        ));
    }
    Ok(WirePart {
        shape,
        local,
        wire_radius: params.wire_radius_mm,
        loop_radius: r1,
        pose: Isometry3::identity(),
    })
}

/// Arc of radius `r1` over `a1` radians (counter-clockwise, opening centered on
/// `+x`), continued tangentially by a clockwise arc of radius `r2` over `a2`.
/// Samples are uniform in arc length.
pub fn two_arc_curve(r1: f64, a1: f64, r2: f64, a2: f64, spacing: f64) -> Vec<Vector3<f64>> {
    let start = PI - a1 / 2.0;
    let end = start + a1;
    let l1 = r1 * a1;
    let l2 = if a2 > 0.0 { r2 * a2 } else { 0.0 };
    let total = l1 + l2;
    let n = ((total / spacing).ceil() as usize).max(8);
    let c2 = Vector3::new(end.cos(), end.sin(), 0.0) * (r1 + r2);
    (0..=n)
        .map(|k| {
            let s = total * k as f64 / n as f64;
            if s <= l1 || l2 == 0.0 {
                let t = start + s / r1;
                Vector3::new(r1 * t.cos(), r1 * t.sin(), 0.0)
            } else {
                let phi = end + PI - (s - l1) / r2;
                c2 + Vector3::new(r2 * phi.cos(), r2 * phi.sin(), 0.0)
            }
        })
        .collect()
}
