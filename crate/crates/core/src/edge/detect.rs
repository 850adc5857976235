//! Depth-gradient edge detector: Sobel magnitude, non-maximum suppression and
//! hysteresis thresholding.

use rayon::prelude::*;

use super::EdgeError;
use crate::depth::DepthImage;
use crate::grid::{Grid, Mask};

/// Gradient in mm/px. `None` where the 3×3 support is incomplete or invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub gx: f64,
    pub gy: f64,
}

impl Gradient {
    #[inline]
    pub fn magnitude(&self) -> f64 {
        self.gx.hypot(self.gy)
    }
}

/// Sobel gradient scaled to mm per pixel.
pub fn depth_gradient(img: &DepthImage) -> Grid<Option<Gradient>> {
    let (w, h) = img.dims();
    let mut out = vec![None; w * h];
    if w < 3 || h < 3 {
        return Grid::from_vec(w, h, out);
    }
    out.par_chunks_mut(w)
        .enumerate()
        .skip(1)
        .take(h - 2)
        .for_each(|(y, row)| {
            for (x, cell) in row.iter_mut().enumerate().take(w - 1).skip(1) {
                *cell = sobel_at(img, x, y);
            }
        });
    Grid::from_vec(w, h, out)
}

fn sobel_at(img: &DepthImage, x: usize, y: usize) -> Option<Gradient> {
    let mut z = [[0.0; 3]; 3];
    for (dy, row) in z.iter_mut().enumerate() {
        for (dx, v) in row.iter_mut().enumerate() {
            *v = img.depth(x + dx - 1, y + dy - 1)?;
        }
    }
    let gx = (z[0][2] + 2.0 * z[1][2] + z[2][2]) - (z[0][0] + 2.0 * z[1][0] + z[2][0]);
    let gy = (z[2][0] + 2.0 * z[2][1] + z[2][2]) - (z[0][0] + 2.0 * z[0][1] + z[0][2]);
    Some(Gradient {
        gx: gx / 8.0,
        gy: gy / 8.0,
    })
}

/// Offset to the neighbor along the gradient, quantized to 45°.
fn gradient_step(g: &Gradient) -> (i64, i64) {
    let angle = g.gy.atan2(g.gx).to_degrees().rem_euclid(180.0);
    match angle {
        a if !(22.5..157.5).contains(&a) => (1, 0),
        a if a < 67.5 => (1, 1),
        a if a < 112.5 => (0, 1),
        _ => (-1, 1),
    }
}

/// Thinned gradient magnitude: zero except at local maxima across the edge.
pub fn non_max_suppress(grad: &Grid<Option<Gradient>>) -> Grid<f64> {
    let mag = grad.map(|g| g.map_or(0.0, |g| g.magnitude()));
    let (w, h) = grad.dims();
    let at = |x: i64, y: i64| {
        if mag.contains(x, y) {
            mag[(x as usize, y as usize)]
        } else {
            0.0
        }
    };
    Grid::from_fn(w, h, |x, y| {
        let Some(g) = grad[(x, y)] else {
            return 0.0;
        };
        let m = mag[(x, y)];
        if m == 0.0 {
            return 0.0;
        }
        let (dx, dy) = gradient_step(&g);
        let (xi, yi) = (x as i64, y as i64);
        // Strict on one side, non-strict on the other: a two-pixel plateau
        // (a step edge under a 3-wide kernel) keeps exactly one pixel.
        if m > at(xi - dx, yi - dy) && m >= at(xi + dx, yi + dy) {
            m
        } else {
            0.0
        }
    })
}

/// Keeps weak pixels (`>= low`) that are 8-connected to a strong one (`>= high`).
pub fn hysteresis(thin: &Grid<f64>, low: f64, high: f64) -> Mask {
    let (w, h) = thin.dims();
    let mut out = Mask::new(w, h, false);
    let mut stack = Vec::new();
    for (x, y, &m) in thin.iter_xy() {
        if m > 0.0 && m >= high && !out[(x, y)] {
            out[(x, y)] = true;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for (nx, ny) in neighbors8(cx, cy, w, h) {
                    let v = thin[(nx, ny)];
                    if !out[(nx, ny)] && v > 0.0 && v >= low {
                        out[(nx, ny)] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn neighbors8(
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> impl Iterator<Item = (usize, usize)> {
    const OFFSETS: [(i64, i64); 8] = [
        (1, 0),
        (0, 1),
        (-1, 0),
        (0, -1),
        (1, 1),
        (-1, 1),
        (-1, -1),
        (1, -1),
    ];
    OFFSETS.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h)
            .then_some((nx as usize, ny as usize))
    })
}

/// Edge pixels of `img`: gradient maxima above `grad_threshold` (mm/px),
/// extended by hysteresis down to `low_ratio · grad_threshold`.
pub fn detect_edges_with(
    img: &DepthImage,
    grad_threshold: f64,
    low_ratio: f64,
) -> Result<Mask, EdgeError> {
    if img.valid_count() == 0 {
        return Err(EdgeError::EmptyImage);
    }
    if !(grad_threshold > 0.0) || !(0.0..=1.0).contains(&low_ratio) {
        return Err(EdgeError::InvalidThreshold(grad_threshold));
    }
    let thin = non_max_suppress(&depth_gradient(img));
    Ok(hysteresis(&thin, low_ratio * grad_threshold, grad_threshold))
}

/// [`detect_edges_with`] using the default low/high ratio of 0.4.
pub fn detect_edges(img: &DepthImage, grad_threshold: f64) -> Result<Mask, EdgeError> {
    detect_edges_with(img, grad_threshold, super::DEFAULT_LOW_RATIO)
}
