//! Gaussian link integral between two straight segments.
//!
//! Two interchangeable kernels evaluate the same double line integral
//!
//! ```text
//!   GLI(a, b) = 1/(4π) ∫_a ∫_b (dγa × dγb) · (γa − γb) / |γa − γb|³
//! ```
//!
//! * [`AnalyticGli`]: closed form. The map `(s, t) ↦ γa(s) − γb(t)` sweeps a
//!   planar parallelogram and the integral equals its signed solid angle seen
//!   from the origin divided by 4π (Klenin–Langowski). The parallelogram is
//!   split along a diagonal and each triangle is evaluated with the
//!   Van Oosterom–Strackee formula, which stays well conditioned where the
//!   arcsine form loses digits.
//! * [`QuadratureGli`]: tensor midpoint rule on the integrand; slow, used as
//!   an independent oracle.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::segment::{segment_distance, Segment3D, MIN_LEN_EPS};
use super::GliError;
use crate::registry::Registry;

/// Per-pair validity thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GliTolerance {
    /// Segments of length `<=` this are degenerate.
    pub min_len: f64,
    /// Pairs closer than or equal to this are near-singular.
    pub min_dist: f64,
}

impl Default for GliTolerance {
    fn default() -> Self {
        Self {
            min_len: MIN_LEN_EPS,
            min_dist: 1e-9,
        }
    }
}

/// A way of evaluating the link integral of a segment pair.
pub trait GliKernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Signed GLI of the pair.
    fn gli(&self, a: &Segment3D, b: &Segment3D) -> Result<f64, GliError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyticGli {
    pub tolerance: GliTolerance,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureGli {
    pub subdivisions: usize,
    pub tolerance: GliTolerance,
}

impl GliKernel for AnalyticGli {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn gli(&self, a: &Segment3D, b: &Segment3D) -> Result<f64, GliError> {
        gli_segments_with(a, b, &self.tolerance)
    }
}

impl GliKernel for QuadratureGli {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn gli(&self, a: &Segment3D, b: &Segment3D) -> Result<f64, GliError> {
        gli_quadrature_with(a, b, self.subdivisions, &self.tolerance)
    }
}

/// Kernel selection and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GliConfig {
    /// Registered kernel name, `analytic` or `quadrature`.
    pub kernel: String,
    /// Midpoint subdivisions per segment for the quadrature kernel.
    pub subdivisions: usize,
    pub tolerance: GliTolerance,
}

impl Default for GliConfig {
    fn default() -> Self {
        Self {
            kernel: "analytic".into(),
            subdivisions: 256,
            tolerance: GliTolerance::default(),
        }
    }
}

/// Built-in kernels keyed by name.
pub fn registry() -> Registry<dyn GliKernel, GliConfig> {
    let mut reg: Registry<dyn GliKernel, GliConfig> = Registry::new("gli kernel");
    reg.register("analytic", |cfg| {
        Box::new(AnalyticGli {
            tolerance: cfg.tolerance,
        })
    })
    .register("quadrature", |cfg| {
        Box::new(QuadratureGli {
            subdivisions: cfg.subdivisions,
            tolerance: cfg.tolerance,
        })
    });
    reg
}

fn check_pair(a: &Segment3D, b: &Segment3D, tol: &GliTolerance) -> Result<(), GliError> {
    for s in [a, b] {
        let length = s.length();
        if !(length > tol.min_len) {
            return Err(GliError::DegenerateSegment { length });
        }
    }
    let distance = segment_distance(a, b);
    if distance <= tol.min_dist {
        return Err(GliError::NearSingular { distance });
    }
    Ok(())
}

fn lex_key(s: &Segment3D) -> [f64; 6] {
    let (p, q) = (s.p0(), s.p1());
    [p.x, p.y, p.z, q.x, q.y, q.z]
}

fn lex_cmp(a: &Segment3D, b: &Segment3D) -> Ordering {
    let (ka, kb) = (lex_key(a), lex_key(b));
    ka.iter()
        .zip(kb.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Signed solid angle of triangle `(a, b, c)` seen from the origin.
#[inline]
fn triangle_solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let triple = a.dot(&b.cross(c));
    let denom = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    2.0 * triple.atan2(denom)
}

/// Closed-form signed GLI with default tolerances.
pub fn gli_segments(a: &Segment3D, b: &Segment3D) -> Result<f64, GliError> {
    gli_segments_with(a, b, &GliTolerance::default())
}

pub fn gli_segments_with(a: &Segment3D, b: &Segment3D, tol: &GliTolerance) -> Result<f64, GliError> {
    check_pair(a, b, tol)?;
    // The integrand is symmetric under swapping the curves; evaluating in a
    // canonical order makes the result bit-identical too.
    let (a, b) = match lex_cmp(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    Ok(gli_closed_form(a, b))
}

fn gli_closed_form(a: &Segment3D, b: &Segment3D) -> f64 {
    let normal = a.direction().cross(&b.direction());
    let v00 = a.p0() - b.p0();
    // Coplanar or parallel pairs: the integrand vanishes identically.
    if normal.dot(&v00) == 0.0 {
        return 0.0;
    }
    let v10 = a.p1() - b.p0();
    let v11 = a.p1() - b.p1();
    let v01 = a.p0() - b.p1();
    let omega = triangle_solid_angle(&v00, &v10, &v11) + triangle_solid_angle(&v00, &v11, &v01);
    -omega / (4.0 * PI)
}

/// Midpoint-rule GLI with default tolerances.
pub fn gli_quadrature(a: &Segment3D, b: &Segment3D, subdivisions: usize) -> Result<f64, GliError> {
    gli_quadrature_with(a, b, subdivisions, &GliTolerance::default())
}

/// Tensor midpoint rule with `subdivisions` cells along each segment.
pub fn gli_quadrature_with(
    a: &Segment3D,
    b: &Segment3D,
    subdivisions: usize,
    tol: &GliTolerance,
) -> Result<f64, GliError> {
    if subdivisions < 2 {
        return Err(GliError::InvalidSubdivisions(subdivisions));
    }
    check_pair(a, b, tol)?;

    let n = subdivisions;
    let h = 1.0 / n as f64;
    let da = a.direction();
    let db = b.direction();
    // The numerator (da × db)·(base − t·db) does not depend on t, so each row
    // reduces to (da × db)·base times a sum of |base − t·db|⁻³.
    let c = da.cross(&db);
    let ts: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
    let d = [db.x, db.y, db.z];
    let row_sum = inverse_cube_sum_fn();

    let mut total = 0.0;
    for i in 0..n {
        let s = (i as f64 + 0.5) * h;
        let base = a.p0() + da * s - b.p0();
        total += c.dot(&base) * row_sum([base.x, base.y, base.z], d, &ts);
    }
    Ok(total * h * h / (4.0 * PI))
}

type RowSum = fn([f64; 3], [f64; 3], &[f64]) -> f64;

fn inverse_cube_sum_fn() -> RowSum {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512f") {
        return |b, d, ts| {
            // SAFETY: guarded by the runtime feature check above.
            unsafe { avx512::inverse_cube_sum(b, d, ts) }
        };
    }
    inverse_cube_sum
}

/// `Σ_t |b − t·d|⁻³` over the given parameters.
fn inverse_cube_sum(b: [f64; 3], d: [f64; 3], ts: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut chunks = ts.chunks_exact(4);
    for chunk in &mut chunks {
        for k in 0..4 {
            acc[k] += inverse_cube(b, d, chunk[k]);
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for &t in chunks.remainder() {
        sum += inverse_cube(b, d, t);
    }
    sum
}

#[inline(always)]
fn inverse_cube(b: [f64; 3], d: [f64; 3], t: f64) -> f64 {
    let x = b[0] - t * d[0];
    let y = b[1] - t * d[1];
    let z = b[2] - t * d[2];
    let r2 = x * x + y * y + z * z;
    1.0 / (r2 * r2.sqrt())
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use std::arch::x86_64::*;

    /// Same sum as the scalar version. `r⁻¹` starts from the 14-bit hardware
    /// estimate and two Newton steps bring it to full double precision.
    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn inverse_cube_sum(b: [f64; 3], d: [f64; 3], ts: &[f64]) -> f64 {
        let (bx, by, bz) = (_mm512_set1_pd(b[0]), _mm512_set1_pd(b[1]), _mm512_set1_pd(b[2]));
        let (dx, dy, dz) = (_mm512_set1_pd(d[0]), _mm512_set1_pd(d[1]), _mm512_set1_pd(d[2]));
        let half = _mm512_set1_pd(0.5);
        let three_halves = _mm512_set1_pd(1.5);
        let mut acc = [_mm512_setzero_pd(); 2];
        let mut chunks = ts.chunks_exact(16);
        for chunk in &mut chunks {
            for (k, acc) in acc.iter_mut().enumerate() {
                let t = _mm512_loadu_pd(chunk.as_ptr().add(8 * k));
                let x = _mm512_fnmadd_pd(t, dx, bx);
                let y = _mm512_fnmadd_pd(t, dy, by);
                let z = _mm512_fnmadd_pd(t, dz, bz);
                let r2 = _mm512_fmadd_pd(z, z, _mm512_fmadd_pd(y, y, _mm512_mul_pd(x, x)));
                let hr2 = _mm512_mul_pd(half, r2);
                let mut inv = _mm512_rsqrt14_pd(r2);
                for _ in 0..2 {
                    let e = _mm512_fnmadd_pd(hr2, _mm512_mul_pd(inv, inv), three_halves);
                    inv = _mm512_mul_pd(inv, e);
                }
                *acc = _mm512_fmadd_pd(inv, _mm512_mul_pd(inv, inv), *acc);
            }
        }
        let mut sum = _mm512_reduce_add_pd(_mm512_add_pd(acc[0], acc[1]));
        for &t in chunks.remainder() {
            sum += super::inverse_cube(b, d, t);
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: [f64; 3], b: [f64; 3]) -> Segment3D {
        Segment3D::new(Vector3::from(a), Vector3::from(b)).unwrap()
    }

    #[test]
    fn coplanar_pair_is_exactly_zero() {
        let a = seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, 1.0, 0.0], [1.0, 1.0, 0.0]);
        assert_eq!(gli_segments(&a, &b).unwrap(), 0.0);
        assert!(gli_quadrature(&a, &b, 64).unwrap().abs() < 1e-12);
    }

    #[test]
    fn swap_is_bit_identical() {
        let a = seg([-1.0, 0.2, 0.0], [1.0, 0.1, 0.3]);
        let b = seg([0.3, -1.0, 1.0], [0.0, 1.0, 1.2]);
        assert_eq!(
            gli_segments(&a, &b).unwrap().to_bits(),
            gli_segments(&b, &a).unwrap().to_bits()
        );
    }

    #[test]
    fn intersecting_pair_is_near_singular() {
        let a = seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, -1.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(matches!(gli_segments(&a, &b), Err(GliError::NearSingular { .. })));
    }

    #[test]
    fn quadrature_rejects_too_few_subdivisions() {
        let a = seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, -1.0, 1.0], [0.0, 1.0, 1.0]);
        assert!(matches!(
            gli_quadrature(&a, &b, 1),
            Err(GliError::InvalidSubdivisions(1))
        ));
    }

    #[test]
    fn quadrature_error_shrinks_with_refinement() {
        let a = seg([-1.0, 0.0, 0.0], [1.0, 0.5, 0.2]);
        let b = seg([0.0, -1.0, 0.7], [0.4, 1.0, 1.0]);
        let exact = gli_segments(&a, &b).unwrap();
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32, 64, 128] {
            let err = (gli_quadrature(&a, &b, n).unwrap() - exact).abs();
            assert!(err < prev, "n={n}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn registry_builds_both_kernels() {
        let reg = registry();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["analytic", "quadrature"]);
        let cfg = GliConfig {
            kernel: "quadrature".into(),
            subdivisions: 512,
            ..GliConfig::default()
        };
        let a = seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, -1.0, 1.0], [0.0, 1.0, 1.0]);
        let exact = reg.create("analytic", &cfg).unwrap().gli(&a, &b).unwrap();
        let approx = reg.create("quadrature", &cfg).unwrap().gli(&a, &b).unwrap();
        assert!((exact - approx).abs() < 1e-5);
    }

    #[test]
    fn dispatched_row_sum_matches_scalar() {
        let ts: Vec<f64> = (0..203).map(|j| (j as f64 + 0.5) / 203.0).collect();
        let b = [0.3, -1.2, 0.8];
        let d = [0.1, 2.0, 0.4];
        let fast = inverse_cube_sum_fn()(b, d, &ts);
        let slow = inverse_cube_sum(b, d, &ts);
        assert!((fast - slow).abs() <= 1e-13 * slow.abs());
    }
}
