//! Depth images and the pinhole camera model.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, Mask};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
}

/// Pinhole intrinsics in pixels. Pixel `(u, v)` has its center at integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// Centered principal point, equal focal lengths.
    pub fn centered(width: usize, height: usize, focal_px: f64) -> Self {
        Self {
            fx: focal_px,
            fy: focal_px,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    /// Camera-space point to pixel coordinates. `p.z` must be positive.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }

    /// Shifts the principal point for a crop starting at `(x0, y0)`.
    pub fn cropped(&self, x0: usize, y0: usize) -> Self {
        Self {
            cx: self.cx - x0 as f64,
            cy: self.cy - y0 as f64,
            ..*self
        }
    }
}

/// Lifts pixel `px` observed at `depth_mm` into camera space.
pub fn backproject(
    px: Vector2<f64>,
    depth_mm: f64,
    k: &Intrinsics,
) -> Result<Vector3<f64>, CameraError> {
    if !(depth_mm > 0.0) {
        return Err(CameraError::NonPositiveDepth(depth_mm));
    }
    Ok(Vector3::new(
        (px.x - k.cx) * depth_mm / k.fx,
        (px.y - k.cy) * depth_mm / k.fy,
        depth_mm,
    ))
}

/// A depth map in millimeters with an explicit validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    depth: Grid<f64>,
    valid: Mask,
    intrinsics: Intrinsics,
}

impl DepthImage {
    pub const DEFAULT_MAX_RANGE_MM: f64 = 2000.0;

    /// Marks pixels valid when their depth is finite and within `(0, 2000)` mm.
    pub fn new(depth: Grid<f64>, intrinsics: Intrinsics) -> Self {
        Self::with_max_range(depth, intrinsics, Self::DEFAULT_MAX_RANGE_MM)
    }

    pub fn with_max_range(depth: Grid<f64>, intrinsics: Intrinsics, max_range_mm: f64) -> Self {
        let valid = depth.map(|&d| d.is_finite() && d > 0.0 && d < max_range_mm);
        Self {
            depth,
            valid,
            intrinsics,
        }
    }

    /// Decodes 16-bit millimeter samples; zero means "no measurement".
    pub fn from_mm_u16(width: usize, height: usize, samples: &[u16], intrinsics: Intrinsics) -> Self {
        let depth = Grid::from_vec(width, height, samples.iter().map(|&v| f64::from(v)).collect());
        Self::new(depth, intrinsics)
    }

    /// Encodes to 16-bit millimeters, rounding to the nearest mm; invalid pixels become 0.
    pub fn to_mm_u16(&self) -> Vec<u16> {
        self.depth
            .data()
            .iter()
            .zip(self.valid.data())
            .map(|(&d, &ok)| if ok { d.round().clamp(1.0, 65535.0) as u16 } else { 0 })
            .collect()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.depth.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    /// Depth at `(x, y)` if the pixel is valid.
    #[inline]
    pub fn depth(&self, x: usize, y: usize) -> Option<f64> {
        if self.valid[(x, y)] {
            Some(self.depth[(x, y)])
        } else {
            None
        }
    }

    /// Raw samples, including whatever is stored at invalid pixels.
    pub fn raw(&self) -> &Grid<f64> {
        &self.depth
    }

    pub fn valid(&self) -> &Mask {
        &self.valid
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        self.valid[(x, y)] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.count()
    }

    fn valid_depths(&self) -> impl Iterator<Item = f64> + '_ {
        self.depth
            .data()
            .iter()
            .zip(self.valid.data())
            .filter_map(|(&d, &ok)| ok.then_some(d))
    }

    pub fn min_depth(&self) -> Option<f64> {
        self.valid_depths().reduce(f64::min)
    }

    pub fn max_depth(&self) -> Option<f64> {
        self.valid_depths().reduce(f64::max)
    }

    /// Minimum valid depth in the `(2r+1)²` neighborhood of `(x, y)`.
    pub fn min_depth_near(&self, x: usize, y: usize, r: usize) -> Option<f64> {
        let x0 = x.saturating_sub(r);
        let y0 = y.saturating_sub(r);
        let x1 = (x + r).min(self.width() - 1);
        let y1 = (y + r).min(self.height() - 1);
        (y0..=y1)
            .flat_map(|yy| (x0..=x1).map(move |xx| (xx, yy)))
            .filter_map(|(xx, yy)| self.depth(xx, yy))
            .reduce(f64::min)
    }

    /// Sub-image `[x0, x0+w) × [y0, y0+h)` with adjusted intrinsics.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> DepthImage {
        assert!(x0 + w <= self.width() && y0 + h <= self.height(), "crop out of bounds");
        DepthImage {
            depth: Grid::from_fn(w, h, |x, y| self.depth[(x0 + x, y0 + y)]),
            valid: Grid::from_fn(w, h, |x, y| self.valid[(x0 + x, y0 + y)]),
            intrinsics: self.intrinsics.cropped(x0, y0),
        }
    }
}
