use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::GliError;

/// Segments shorter than this are numerically degenerate regardless of configuration.
pub const MIN_LEN_EPS: f64 = 1e-9;

/// An oriented straight segment in camera space (mm) together with the pixel
/// positions it was lifted from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment3D {
    p0: Vector3<f64>,
    p1: Vector3<f64>,
    pixel_p0: Vector2<f64>,
    pixel_p1: Vector2<f64>,
}

impl Segment3D {
    /// Builds a segment whose pixel footprint is the xy projection of its endpoints.
    pub fn new(p0: Vector3<f64>, p1: Vector3<f64>) -> Result<Self, GliError> {
        Self::with_min_len(p0, p1, MIN_LEN_EPS)
    }

    /// Like [`Segment3D::new`] but rejects segments of length `<= min_len`.
    pub fn with_min_len(p0: Vector3<f64>, p1: Vector3<f64>, min_len: f64) -> Result<Self, GliError> {
        let length = (p1 - p0).norm();
        if !length.is_finite() || length <= min_len.max(MIN_LEN_EPS) {
            return Err(GliError::DegenerateSegment { length });
        }
        Ok(Self {
            p0,
            p1,
            pixel_p0: p0.xy(),
            pixel_p1: p1.xy(),
        })
    }

    pub fn with_pixels(mut self, pixel_p0: Vector2<f64>, pixel_p1: Vector2<f64>) -> Self {
        self.pixel_p0 = pixel_p0;
        self.pixel_p1 = pixel_p1;
        self
    }

    #[inline]
    pub fn p0(&self) -> Vector3<f64> {
        self.p0
    }

    #[inline]
    pub fn p1(&self) -> Vector3<f64> {
        self.p1
    }

    #[inline]
    pub fn pixel_p0(&self) -> Vector2<f64> {
        self.pixel_p0
    }

    #[inline]
    pub fn pixel_p1(&self) -> Vector2<f64> {
        self.pixel_p1
    }

    #[inline]
    pub fn direction(&self) -> Vector3<f64> {
        self.p1 - self.p0
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    pub fn pixel_length(&self) -> f64 {
        (self.pixel_p1 - self.pixel_p0).norm()
    }

    /// Applies `f` to both 3D endpoints, keeping the pixel footprint.
    pub fn map_points(&self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> Result<Self, GliError> {
        Ok(Self::new(f(self.p0), f(self.p1))?.with_pixels(self.pixel_p0, self.pixel_p1))
    }
}

/// Minimum distance between two 3D segments.
pub fn segment_distance(a: &Segment3D, b: &Segment3D) -> f64 {
    let (pa, pb) = closest_points(a.p0, a.p1, b.p0, b.p1);
    (pa - pb).norm()
}

/// Closest points between segments `p0→p1` and `q0→q1` (Ericson, Real-Time Collision Detection §5.1.9).
pub fn closest_points(
    p0: Vector3<f64>,
    p1: Vector3<f64>,
    q0: Vector3<f64>,
    q1: Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return (p0, q0);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p0 + d1 * s, q0 + d2 * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: [f64; 3], b: [f64; 3]) -> Segment3D {
        Segment3D::new(Vector3::from(a), Vector3::from(b)).unwrap()
    }

    #[test]
    fn rejects_degenerate_and_short() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert!(matches!(
            Segment3D::new(p, p),
            Err(GliError::DegenerateSegment { .. })
        ));
        let q = p + Vector3::new(0.5, 0.0, 0.0);
        assert!(Segment3D::new(p, q).is_ok());
        assert!(Segment3D::with_min_len(p, q, 1.0).is_err());
    }

    #[test]
    fn distances_of_simple_configurations() {
        // skew, perpendicular, one unit apart
        let a = seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, -1.0, 1.0], [0.0, 1.0, 1.0]);
        assert!((segment_distance(&a, &b) - 1.0).abs() < 1e-15);
        // parallel, offset beyond the end
        let c = seg([3.0, 1.0, 0.0], [5.0, 1.0, 0.0]);
        assert!((segment_distance(&a, &c) - 5f64.sqrt()).abs() < 1e-12);
        // touching
        let d = seg([1.0, 0.0, 0.0], [1.0, 4.0, 0.0]);
        assert!(segment_distance(&a, &d) < 1e-15);
    }
}
