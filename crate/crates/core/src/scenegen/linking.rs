//! Pairwise geometry of centerlines: linking number, clearance, crossings.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::gli::{gli_segments, segment_distance, GliError, GliKernel, Segment3D};

/// Segments of the polygon closed by the chord from the last point to the first.
/// Zero-length edges are skipped.
pub fn closed_polygon(points: &[Vector3<f64>]) -> Vec<Segment3D> {
    let n = points.len();
    (0..n)
        .filter_map(|i| Segment3D::new(points[i], points[(i + 1) % n]).ok())
        .collect()
}

/// Open polyline segments.
pub fn polyline(points: &[Vector3<f64>]) -> Vec<Segment3D> {
    points
        .windows(2)
        .filter_map(|w| Segment3D::new(w[0], w[1]).ok())
        .collect()
}

/// Sum of pairwise closed-form GLI between two closure-completed centerlines.
pub fn linking_number(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<f64, GliError> {
    let (sa, sb) = (closed_polygon(a), closed_polygon(b));
    let mut total = 0.0;
    for x in &sa {
        for y in &sb {
            total += gli_segments(x, y)?;
        }
    }
    Ok(total)
}

/// Same sum evaluated with an arbitrary kernel.
pub fn linking_number_with(
    a: &[Vector3<f64>],
    b: &[Vector3<f64>],
    kernel: &dyn GliKernel,
) -> Result<f64, GliError> {
    let (sa, sb) = (closed_polygon(a), closed_polygon(b));
    let mut total = 0.0;
    for x in &sa {
        for y in &sb {
            total += kernel.gli(x, y)?;
        }
    }
    Ok(total)
}

/// Minimum distance between two open polylines.
pub fn min_distance(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let (sa, sb) = (polyline(a), polyline(b));
    let mut best = f64::INFINITY;
    for x in &sa {
        for y in &sb {
            best = best.min(segment_distance(x, y));
        }
    }
    best
}

/// A crossing of two centerlines in the top-down (x, y) projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedCrossing {
    pub xy: Vector2<f64>,
    /// Height of the upper strand at the crossing.
    pub upper_z: f64,
    pub lower_z: f64,
}

fn seg_intersection(
    p: Vector2<f64>,
    p2: Vector2<f64>,
    q: Vector2<f64>,
    q2: Vector2<f64>,
) -> Option<(f64, f64)> {
    let r = p2 - p;
    let s = q2 - q;
    let denom = r.perp(&s);
    if denom == 0.0 {
        return None;
    }
    let qp = q - p;
    let t = qp.perp(&s) / denom;
    let u = qp.perp(&r) / denom;
    ((0.0..1.0).contains(&t) && (0.0..1.0).contains(&u)).then_some((t, u))
}

/// All crossings of the two open polylines seen from above.
pub fn projected_crossings(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Vec<ProjectedCrossing> {
    let xy = |v: &Vector3<f64>| Vector2::new(v.x, v.y);
    let mut out = Vec::new();
    for wa in a.windows(2) {
        for wb in b.windows(2) {
            if let Some((t, u)) = seg_intersection(xy(&wa[0]), xy(&wa[1]), xy(&wb[0]), xy(&wb[1])) {
                let pa = wa[0] + (wa[1] - wa[0]) * t;
                let pb = wb[0] + (wb[1] - wb[0]) * u;
                out.push(ProjectedCrossing {
                    xy: xy(&pa),
                    upper_z: pa.z.max(pb.z),
                    lower_z: pa.z.min(pb.z),
                });
            }
        }
    }
    out
}
