//! Z-buffer rendering of wire tubes over a flat floor.

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SceneTruth;
use crate::depth::{DepthImage, Intrinsics};
use crate::grid::{Grid, Mask};

/// A camera looking straight down at the floor.
///
/// Scene coordinates have z up and the floor at z = 0; the camera sits at
/// height `floor_mm` above the scene origin. Scene `(x, y, z)` maps to camera
/// `(x, −y, floor_mm − z)`, a proper rotation so handedness is preserved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    pub intrinsics: Intrinsics,
    pub floor_mm: f64,
}

impl Camera {
    pub fn overhead(width: usize, height: usize, focal_px: f64, floor_mm: f64) -> Self {
        Self {
            width,
            height,
            intrinsics: Intrinsics::centered(width, height, focal_px),
            floor_mm,
        }
    }

    #[inline]
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(p.x, -p.y, self.floor_mm - p.z)
    }

    #[inline]
    pub fn project_scene(&self, p: &Vector3<f64>) -> Vector2<f64> {
        self.intrinsics.project(&self.to_camera(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of additive Gaussian depth noise, mm.
    pub sigma_mm: f64,
    /// Round depth to whole millimeters, as a 16-bit depth file would.
    pub quantize_mm: bool,
    /// Width of the invalid frame around the image, px.
    pub invalid_border_px: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_mm: 1.0,
            quantize_mm: true,
            invalid_border_px: 0,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            sigma_mm: 0.0,
            quantize_mm: false,
            invalid_border_px: 0,
        }
    }
}

/// Output of [`render_depth`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub depth: DepthImage,
    /// 0 for floor, `i + 1` where part `i` is the nearest surface.
    pub labels: Grid<u16>,
    /// Per part: projected outline polylines in pixel coordinates.
    pub silhouettes: Vec<Vec<Vec<Vector2<f64>>>>,
}

impl Rendered {
    pub fn part_mask(&self, part: usize) -> Mask {
        let id = (part + 1) as u16;
        self.labels.map(|&l| l == id)
    }

    /// Pixels owned by any of the given parts.
    pub fn parts_mask(&self, parts: &[usize]) -> Mask {
        self.labels
            .map(|&l| l > 0 && parts.contains(&(l as usize - 1)))
    }
}

/// Sphere samples along each centerline, close enough that the union is a
/// smooth tube to well under a pixel.
fn tube_spheres(line: &[Vector3<f64>], radius: f64) -> Vec<Vector3<f64>> {
    let step = radius / 4.0;
    let mut out = Vec::new();
    for w in line.windows(2) {
        let n = ((w[1] - w[0]).norm() / step).ceil().max(1.0) as usize;
        for k in 0..n {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    if let Some(last) = line.last() {
        out.push(*last);
    }
    out
}

/// Renders depth and labels by exact ray–sphere intersection, then applies
/// noise. Noise is drawn in raster order from a generator seeded by `seed`.
pub fn render_depth(scene: &SceneTruth, camera: &Camera, noise: &NoiseModel, seed: u64) -> Rendered {
    let (w, h) = (camera.width, camera.height);
    let k = &camera.intrinsics;
    let mut depth = Grid::new(w, h, camera.floor_mm);
    let mut labels = Grid::new(w, h, 0u16);

    for (id, part) in scene.parts.iter().enumerate() {
        let r = part.wire_radius;
        for center in tube_spheres(&part.centerline(), r) {
            let c = camera.to_camera(&center);
            if c.z <= r {
                continue;
            }
            let px = k.project(&c);
            let reach = r * k.fx.max(k.fy) / (c.z - r) + 1.0;
            let x0 = (px.x - reach).floor().max(0.0) as usize;
            let y0 = (px.y - reach).floor().max(0.0) as usize;
            let x1 = ((px.x + reach).ceil() as i64).min(w as i64 - 1);
            let y1 = ((px.y + reach).ceil() as i64).min(h as i64 - 1);
            if x1 < 0 || y1 < 0 {
                continue;
            }
            let cc = c.norm_squared() - r * r;
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    let d = Vector3::new((x as f64 - k.cx) / k.fx, (y as f64 - k.cy) / k.fy, 1.0);
                    let a = d.norm_squared();
                    let b = d.dot(&c);
                    let disc = b * b - a * cc;
                    if disc < 0.0 {
                        continue;
                    }
                    let z = (b - disc.sqrt()) / a;
                    if z < depth[(x, y)] {
                        depth[(x, y)] = z;
                        labels[(x, y)] = (id + 1) as u16;
                    }
                }
            }
        }
    }

    if noise.sigma_mm > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.sigma_mm).expect("finite sigma");
        for v in depth.data_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    if noise.quantize_mm {
        for v in depth.data_mut() {
            *v = v.round();
        }
    }
    let border = noise.invalid_border_px;
    if border > 0 {
        for y in 0..h {
            for x in 0..w {
                if x < border || y < border || x + border >= w || y + border >= h {
                    depth[(x, y)] = 0.0;
                }
            }
        }
    }

    let silhouettes = scene
        .parts
        .iter()
        .map(|p| silhouette(&p.centerline(), p.wire_radius, camera))
        .collect();
    Rendered {
        depth: DepthImage::new(depth, *k),
        labels,
        silhouettes,
    }
}

/// Outline of a tube seen from above: the projected centerline offset by the
/// projected wire radius on both sides, closed by semicircular caps at open ends.
pub fn silhouette(line: &[Vector3<f64>], radius: f64, camera: &Camera) -> Vec<Vec<Vector2<f64>>> {
    let n = line.len();
    if n < 2 {
        return Vec::new();
    }
    let pts: Vec<Vector2<f64>> = line.iter().map(|p| camera.project_scene(p)).collect();
    let half: Vec<f64> = line
        .iter()
        .map(|p| radius * camera.intrinsics.fx / camera.to_camera(p).z)
        .collect();
    let normal = |i: usize| {
        let t = pts[(i + 1).min(n - 1)] - pts[i.saturating_sub(1)];
        let t = t / t.norm();
        Vector2::new(-t.y, t.x)
    };
    let left: Vec<_> = (0..n).map(|i| pts[i] + normal(i) * half[i]).collect();
    let right: Vec<_> = (0..n).map(|i| pts[i] - normal(i) * half[i]).collect();
    let mut out = vec![left, right];
    let closed = (line[0] - line[n - 1]).norm() < 1e-6;
    if !closed {
        for (i, sign) in [(0usize, -1.0), (n - 1, 1.0)] {
            let nrm = normal(i);
            let tangent = Vector2::new(nrm.y, -nrm.x) * sign;
            let cap = (0..=16)
                .map(|k| {
                    let a = std::f64::consts::PI * k as f64 / 16.0;
                    pts[i] + (nrm * a.cos() + tangent * a.sin()) * half[i]
                })
                .collect();
            out.push(cap);
        }
    }
    out
}
