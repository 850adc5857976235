//! Placement strategies: how parts are posed relative to each other.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, Unit, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::linking::{linking_number, min_distance};
use super::part::WirePart;
use super::SceneError;
use crate::registry::Registry;

/// What a placement may assume about the scene volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementContext {
    pub width_px: usize,
    pub height_px: usize,
    pub focal_px: f64,
    pub floor_mm: f64,
    /// Parts must project at least this far inside the image border.
    pub margin_px: f64,
    /// Extra clearance beyond contact for parts meant to be apart, mm.
    pub separation_mm: f64,
    pub max_attempts: usize,
}

impl PlacementContext {
    /// Whether the scene point projects inside the image with the margin.
    pub fn in_view(&self, p: &Vector3<f64>) -> bool {
        let depth = self.floor_mm - p.z;
        if depth <= 0.0 {
            return false;
        }
        let u = self.focal_px * p.x / depth;
        let v = self.focal_px * p.y / depth;
        let half_w = self.width_px as f64 / 2.0 - self.margin_px;
        let half_h = self.height_px as f64 / 2.0 - self.margin_px;
        u.abs() <= half_w && v.abs() <= half_h
    }

    /// Half extents of the visible floor, mm.
    pub fn floor_extent(&self) -> (f64, f64) {
        let s = self.floor_mm / self.focal_px;
        (
            (self.width_px as f64 / 2.0 - self.margin_px) * s,
            (self.height_px as f64 / 2.0 - self.margin_px) * s,
        )
    }
}

/// Poses a set of parts. Implementations retry internally and report
/// [`SceneError::PlacementFailed`] when they run out of attempts.
pub trait Placement: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of parts this strategy expects, if fixed.
    fn part_count(&self) -> Option<usize> {
        None
    }

    fn place(
        &self,
        parts: &[WirePart],
        ctx: &PlacementContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Isometry3<f64>>, SceneError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Separated;
#[derive(Debug, Clone, Copy, Default)]
pub struct Overlapped;
#[derive(Debug, Clone, Copy, Default)]
pub struct Twisted;
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPile;
/// A twisted pair and one free part, far enough apart to tell the regions apart.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoRegion;

/// Built-in placements keyed by name.
pub fn registry() -> Registry<dyn Placement, ()> {
    let mut reg: Registry<dyn Placement, ()> = Registry::new("placement");
    reg.register("separated", |_| Box::new(Separated))
        .register("overlapped", |_| Box::new(Overlapped))
        .register("twisted", |_| Box::new(Twisted))
        .register("random_pile", |_| Box::new(RandomPile))
        .register("two_region", |_| Box::new(TwoRegion));
    reg
}

/// Pose mapping the part frame onto the plane through `origin` spanned by the
/// orthonormal `e1`, `e2`, with the part's opening turned to in-plane angle `gap`.
fn plane_pose(origin: Vector3<f64>, e1: Vector3<f64>, e2: Vector3<f64>, gap: f64) -> Isometry3<f64> {
    let (s, c) = gap.sin_cos();
    let x = e1 * c + e2 * s;
    let y = e2 * c - e1 * s;
    let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, x.cross(&y)]));
    Isometry3::from_parts(
        Translation3::from(origin),
        UnitQuaternion::from_rotation_matrix(&rot),
    )
}

fn flat_pose(xy: (f64, f64), z: f64, yaw: f64) -> Isometry3<f64> {
    plane_pose(Vector3::new(xy.0, xy.1, z), Vector3::x(), Vector3::y(), yaw)
}

/// Rotation about the vertical axis, then a horizontal shift.
fn yaw_shift(yaw: f64, shift: Vector3<f64>) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::from(shift),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
    )
}

fn lowest_z(points: &[Vector3<f64>]) -> f64 {
    points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min)
}

fn all_in_view(ctx: &PlacementContext, points: &[Vector3<f64>]) -> bool {
    points.iter().all(|p| ctx.in_view(p))
}

fn clear_of(lines: &[Vec<Vector3<f64>>], candidate: &[Vector3<f64>], clearance: f64) -> bool {
    lines.iter().all(|l| min_distance(l, candidate) > clearance)
}

fn uniform_xy(rng: &mut ChaCha8Rng, ext: (f64, f64)) -> (f64, f64) {
    (rng.random_range(-ext.0..=ext.0), rng.random_range(-ext.1..=ext.1))
}

fn require(parts: &[WirePart], n: usize, name: &str) -> Result<(), SceneError> {
    if parts.len() != n {
        return Err(SceneError::PartCount {
            placement: name.to_string(),
            expected: n,
            got: parts.len(),
        });
    }
    Ok(())
}

fn wire_radius(parts: &[WirePart]) -> f64 {
    parts.iter().map(|p| p.wire_radius).fold(0.0, f64::max)
}

/// Places `part` flat on the floor clear of `placed` lines.
fn place_flat_clear(
    part: &WirePart,
    placed: &[Vec<Vector3<f64>>],
    ctx: &PlacementContext,
    clearance: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Isometry3<f64>> {
    let ext = ctx.floor_extent();
    for _ in 0..ctx.max_attempts {
        let pose = flat_pose(uniform_xy(rng, ext), part.wire_radius, rng.random_range(0.0..2.0 * PI));
        let line = part.centerline_with(&pose);
        if all_in_view(ctx, &line) && clear_of(placed, &line, clearance) {
            return Some(pose);
        }
    }
    None
}

impl Placement for Separated {
    fn name(&self) -> &'static str {
        "separated"
    }

    fn place(
        &self,
        parts: &[WirePart],
        ctx: &PlacementContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Isometry3<f64>>, SceneError> {
        let clearance = 2.0 * wire_radius(parts) + ctx.separation_mm;
        let mut poses = Vec::with_capacity(parts.len());
        let mut lines = Vec::with_capacity(parts.len());
        for part in parts {
            let pose = place_flat_clear(part, &lines, ctx, clearance, rng)
                .ok_or_else(|| SceneError::PlacementFailed(self.name().into()))?;
            lines.push(part.centerline_with(&pose));
            poses.push(pose);
        }
        Ok(poses)
    }
}

impl Placement for Overlapped {
    fn name(&self) -> &'static str {
        "overlapped"
    }

    fn part_count(&self) -> Option<usize> {
        Some(2)
    }

    /// The second part lies flat on the floor; the first lies flat on top of it.
    fn place(
        &self,
        parts: &[WirePart],
        ctx: &PlacementContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Isometry3<f64>>, SceneError> {
        require(parts, 2, self.name())?;
        let (a, b) = (&parts[0], &parts[1]);
        let r = wire_radius(parts);
        let ext = ctx.floor_extent();
        for _ in 0..ctx.max_attempts {
            let base = uniform_xy(rng, (ext.0 * 0.5, ext.1 * 0.5));
            let pose_b = flat_pose(base, b.wire_radius, rng.random_range(0.0..2.0 * PI));
            let reach = (a.loop_radius + b.loop_radius) / 2.0 * rng.random_range(0.5..1.3);
            let dir = rng.random_range(0.0..2.0 * PI);
            let gap = rng.random_range(0.2..1.5);
            let top = (base.0 + reach * dir.cos(), base.1 + reach * dir.sin());
            let pose_a = flat_pose(top, b.wire_radius + 2.0 * r + gap, rng.random_range(0.0..2.0 * PI));
            let (la, lb) = (a.centerline_with(&pose_a), b.centerline_with(&pose_b));
            if all_in_view(ctx, &la) && all_in_view(ctx, &lb) && min_distance(&la, &lb) > 2.0 * r {
                return Ok(vec![pose_a, pose_b]);
            }
        }
        Err(SceneError::PlacementFailed(self.name().into()))
    }
}

/// Chain-link construction in a canonical frame: part A stands steeply with
/// its opening up; part B is threaded through A's loop near the bottom, resting
/// on A's lower arc on one side and on the floor on the other.
fn twisted_pair(
    a: &WirePart,
    b: &WirePart,
    rng: &mut ChaCha8Rng,
) -> (Isometry3<f64>, Isometry3<f64>) {
    let r = a.wire_radius.max(b.wire_radius);
    let beta = rng.random_range(50f64.to_radians()..80f64.to_radians());
    let e1 = Vector3::x();
    let e2 = Vector3::new(0.0, beta.cos(), beta.sin());
    let ra = a.loop_radius;
    let center_a = Vector3::new(0.0, 0.0, a.wire_radius + ra * beta.sin());
    let gap_a = PI / 2.0 + rng.random_range(-0.5..0.5);
    let pose_a = plane_pose(center_a, e1, e2, gap_a);

    // B crosses A's plane just above A's lowest wire point.
    let bottom = center_a - e2 * ra;
    let clearance = 2.0 * r + rng.random_range(0.5..3.0);
    let p = bottom + e2 * (clearance / beta.sin());
    let rb = b.loop_radius;
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let drop = (p.z - b.wire_radius) / (2.0 * rb);
    let alpha = drop.clamp(-1.0, 1.0).asin();
    let d = Vector3::new(side * alpha.cos(), 0.0, -alpha.sin());
    let y = Vector3::y();
    let center_b = p + d * rb;
    // In B's frame, p sits at angle π; the opening goes to ±90° from there.
    let gap_b = if rng.random_bool(0.5) { PI / 2.0 } else { -PI / 2.0 } + rng.random_range(-0.35..0.35);
    let pose_b = plane_pose(center_b, d, y, gap_b);
    (pose_a, pose_b)
}

/// Tries random twisted pairs until one is linked, interpenetration free, above
/// the floor and in view.
fn place_twisted(
    a: &WirePart,
    b: &WirePart,
    ctx: &PlacementContext,
    rng: &mut ChaCha8Rng,
    mut anchor: impl FnMut(&mut ChaCha8Rng) -> (f64, f64),
    mut accept: impl FnMut(&[Vector3<f64>], &[Vector3<f64>]) -> bool,
) -> Option<(Isometry3<f64>, Isometry3<f64>)> {
    let r = a.wire_radius.max(b.wire_radius);
    for _ in 0..ctx.max_attempts {
        let (pa, pb) = twisted_pair(a, b, rng);
        let (x, y) = anchor(rng);
        let shift = yaw_shift(rng.random_range(0.0..2.0 * PI), Vector3::new(x, y, 0.0));
        let (pa, pb) = (shift * pa, shift * pb);
        let (la, lb) = (a.centerline_with(&pa), b.centerline_with(&pb));
        let floor_ok = lowest_z(&la) >= a.wire_radius - 1e-6 && lowest_z(&lb) >= b.wire_radius - 1e-6;
        if !floor_ok || !all_in_view(ctx, &la) || !all_in_view(ctx, &lb) {
            continue;
        }
        if min_distance(&la, &lb) <= 2.0 * r || !accept(&la, &lb) {
            continue;
        }
        match linking_number(&la, &lb) {
            Ok(lk) if (lk.abs() - 1.0).abs() < 0.25 => return Some((pa, pb)),
            _ => continue,
        }
    }
    None
}

impl Placement for Twisted {
    fn name(&self) -> &'static str {
        "twisted"
    }

    fn part_count(&self) -> Option<usize> {
        Some(2)
    }

    fn place(
        &self,
        parts: &[WirePart],
        ctx: &PlacementContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Isometry3<f64>>, SceneError> {
        require(parts, 2, self.name())?;
        let ext = ctx.floor_extent();
        let anchor = |rng: &mut ChaCha8Rng| uniform_xy(rng, (ext.0 * 0.3, ext.1 * 0.3));
        place_twisted(&parts[0], &parts[1], ctx, rng, anchor, |_, _| true)
            .map(|(a, b)| vec![a, b])
            .ok_or_else(|| SceneError::PlacementFailed(self.name().into()))
    }
}

impl Placement for RandomPile {
    fn name(&self) -> &'static str {
        "random_pile"
    }

    /// Drops parts one by one at random poses (tilted up to 25°), each resting
    /// at the lowest height that keeps it clear of the floor and earlier parts.
    fn place(
        &self,
        parts: &[WirePart],
        ctx: &PlacementContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Isometry3<f64>>, SceneError> {
        let r = wire_radius(parts);
        let ext = ctx.floor_extent();
        let mut poses = Vec::with_capacity(parts.len());
        let mut lines: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(parts.len());
        for part in parts {
            let mut placed = None;
            for _ in 0..ctx.max_attempts {
                let tilt = rng.random_range(0.0..25f64.to_radians());
                let tilt_dir = rng.random_range(0.0..2.0 * PI);
                let axis = Unit::new_normalize(Vector3::new(tilt_dir.cos(), tilt_dir.sin(), 0.0));
                let rot = UnitQuaternion::from_axis_angle(&axis, tilt)
                    * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.random_range(0.0..2.0 * PI));
                let (x, y) = uniform_xy(rng, (ext.0 * 0.6, ext.1 * 0.6));
                let base = Isometry3::from_parts(Translation3::new(x, y, 0.0), rot);
                let line = part.centerline_with(&base);
                let mut z = part.wire_radius - lowest_z(&line);
                let lifted = |z: f64| line.iter().map(|p| p + Vector3::z() * z).collect::<Vec<_>>();
                // Raise in 1 mm steps until clear of everything below.
                let mut candidate = lifted(z);
                while !clear_of(&lines, &candidate, 2.0 * r) && z < 400.0 {
                    z += 1.0;
                    candidate = lifted(z);
                }
                if z < 400.0 && all_in_view(ctx, &candidate) {
                    placed = Some((Translation3::new(0.0, 0.0, z) * base, candidate));
                    break;
                }
            }
            let (pose, line) = placed.ok_or_else(|| SceneError::PlacementFailed(self.name().into()))?;
            poses.push(pose);
            lines.push(line);
        }
        Ok(poses)
    }
}

impl Placement for TwoRegion {
    fn name(&self) -> &'static str {
        "two_region"
    }

    fn part_count(&self) -> Option<usize> {
        Some(3)
    }

    /// Parts 0 and 1 form a twisted pair on one side of the image; part 2
    /// lies flat on the opposite side.
    fn place(
        &self,
        parts: &[WirePart],
        ctx: &PlacementContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Isometry3<f64>>, SceneError> {
        require(parts, 3, self.name())?;
        let ext = ctx.floor_extent();
        let reach = ext.0.min(ext.1);
        for _ in 0..ctx.max_attempts {
            let dir = rng.random_range(0.0..2.0 * PI);
            let pair_at = |rng: &mut ChaCha8Rng| {
                let d = dir + rng.random_range(-0.3..0.3);
                let rho = reach * rng.random_range(0.3..0.45);
                (rho * d.cos(), rho * d.sin())
            };
            let Some((pa, pb)) = place_twisted(&parts[0], &parts[1], ctx, rng, pair_at, |_, _| true) else {
                continue;
            };
            let pair = [parts[0].centerline_with(&pa), parts[1].centerline_with(&pb)];
            let free = &parts[2];
            let clearance = 2.0 * wire_radius(parts) + ctx.separation_mm.max(40.0);
            for _ in 0..ctx.max_attempts {
                let d = dir + PI + rng.random_range(-0.5..0.5);
                let rho = reach * rng.random_range(0.5..0.75);
                let pose = flat_pose((rho * d.cos(), rho * d.sin()), free.wire_radius, rng.random_range(0.0..2.0 * PI));
                let line = free.centerline_with(&pose);
                if all_in_view(ctx, &line) && clear_of(&pair, &line, clearance) {
                    return Ok(vec![pa, pb, pose]);
                }
            }
        }
        Err(SceneError::PlacementFailed(self.name().into()))
    }
}
