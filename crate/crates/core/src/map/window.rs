//! Sliding-window topology coordinates.

use serde::{Deserialize, Serialize};

use super::MapError;
use crate::edge::EdgeSegmentSet;
use crate::gli::{density, writhe, writhe_matrix, Segment3D, WritheMatrix};
use crate::grid::Grid;

/// Axis-aligned pixel rectangle `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        x1.saturating_sub(x0) * y1.saturating_sub(y0)
    }

    /// Pixel-center coordinates of the rectangle's center.
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + (self.w as f64 - 1.0) / 2.0,
            self.y as f64 + (self.h as f64 - 1.0) / 2.0,
        )
    }

    /// Whether the segment from `a` to `b` (pixel coordinates) touches the
    /// area covered by the rectangle's pixels.
    pub fn intersects_segment(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let (xmin, ymin) = (self.x as f64 - 0.5, self.y as f64 - 0.5);
        let (xmax, ymax) = (xmin + self.w as f64, ymin + self.h as f64);
        // Liang–Barsky clipping of the parametric segment against the box.
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [
            (-dx, a.0 - xmin),
            (dx, xmax - a.0),
            (-dy, a.1 - ymin),
            (dy, ymax - a.1),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
        t0 <= t1
    }
}

/// Window start positions along one axis: every `stride`, plus a final window
/// flush with the border when the regular steps leave a remainder.
pub fn window_origins(len: usize, window: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..)
        .map(|k| k * stride)
        .take_while(|&s| s + window <= len)
        .collect();
    let last = len - window;
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Topology of one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowCell {
    pub writhe: f64,
    pub density: f64,
    pub segment_count: usize,
}

/// Per-window writhe and density over a sliding grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    pub window_px: (usize, usize),
    pub stride_px: (usize, usize),
    pub image_dims: (usize, usize),
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub cells: Grid<WindowCell>,
}

impl WindowGrid {
    /// Grid geometry with all cells zero.
    pub fn empty(
        image_dims: (usize, usize),
        window_px: (usize, usize),
        stride_px: (usize, usize),
    ) -> Result<Self, MapError> {
        let (w, h) = image_dims;
        let (ww, wh) = window_px;
        if ww == 0 || wh == 0 || ww > w || wh > h {
            return Err(MapError::WindowLargerThanImage {
                window: window_px,
                image: image_dims,
            });
        }
        if stride_px.0 == 0 || stride_px.1 == 0 {
            return Err(MapError::InvalidStride(stride_px));
        }
        let xs = window_origins(w, ww, stride_px.0);
        let ys = window_origins(h, wh, stride_px.1);
        let cells = Grid::new(xs.len(), ys.len(), WindowCell::default());
        Ok(Self {
            window_px,
            stride_px,
            image_dims,
            xs,
            ys,
            cells,
        })
    }

    pub fn rect(&self, col: usize, row: usize) -> Rect {
        Rect::new(self.xs[col], self.ys[row], self.window_px.0, self.window_px.1)
    }

    pub fn rects(&self) -> impl Iterator<Item = (usize, usize, Rect)> + '_ {
        (0..self.ys.len())
            .flat_map(move |row| (0..self.xs.len()).map(move |col| (col, row, self.rect(col, row))))
    }

    pub fn writhe_grid(&self) -> Grid<f64> {
        self.cells.map(|c| c.writhe)
    }

    pub fn density_grid(&self) -> Grid<f64> {
        self.cells.map(|c| c.density)
    }

    pub fn mean_density(&self) -> f64 {
        let d = self.cells.data();
        d.iter().map(|c| c.density).sum::<f64>() / d.len() as f64
    }
}

/// Writhe and density of the sub-matrix of `t` on `members` (ascending indices).
pub fn sub_coordinate(t: &WritheMatrix, members: &[usize]) -> (f64, f64) {
    if members.len() < 2 {
        return (0.0, 0.0);
    }
    let sub = t.submatrix(members);
    (writhe(&sub), density(&sub))
}

/// Indices of segments whose pixel footprint touches `rect`.
pub fn members(segments: &[Segment3D], rect: &Rect) -> Vec<usize> {
    segments
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let (a, b) = (s.pixel_p0(), s.pixel_p1());
            rect.intersects_segment((a.x, a.y), (b.x, b.y))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Window grid using a precomputed writhe matrix of `segments`.
pub fn sliding_topology_with(
    segments: &EdgeSegmentSet,
    t: Option<&WritheMatrix>,
    window_px: (usize, usize),
    stride_px: (usize, usize),
) -> Result<WindowGrid, MapError> {
    let mut grid = WindowGrid::empty(segments.source_dims, window_px, stride_px)?;
    let Some(t) = t else {
        return Ok(grid);
    };
    let rects: Vec<_> = grid.rects().collect();
    for (col, row, rect) in rects {
        let idx = members(&segments.segments, &rect);
        let (writhe, density) = sub_coordinate(t, &idx);
        grid.cells[(col, row)] = WindowCell {
            writhe,
            density,
            segment_count: idx.len(),
        };
    }
    Ok(grid)
}

/// Writhe and density of every window. Segments are assigned whole to every
/// window their footprint touches; windows with fewer than two segments are zero.
pub fn sliding_topology(
    segments: &EdgeSegmentSet,
    window_px: (usize, usize),
    stride_px: (usize, usize),
) -> Result<WindowGrid, MapError> {
    let t = if segments.len() >= 2 {
        Some(writhe_matrix(&segments.segments)?)
    } else {
        None
    };
    sliding_topology_with(segments, t.as_ref(), window_px, stride_px)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origins_cover_and_clamp() {
        assert_eq!(window_origins(512, 128, 64), vec![0, 64, 128, 192, 256, 320, 384]);
        assert_eq!(window_origins(100, 30, 20), vec![0, 20, 40, 60, 70]);
        assert_eq!(window_origins(30, 30, 7), vec![0]);
    }

    #[test]
    fn segment_rect_clipping() {
        let r = Rect::new(10, 10, 10, 10);
        assert!(r.intersects_segment((0.0, 0.0), (30.0, 30.0)));
        assert!(r.intersects_segment((12.0, 12.0), (13.0, 13.0)));
        assert!(!r.intersects_segment((0.0, 0.0), (30.0, 0.0)));
        assert!(!r.intersects_segment((0.0, 25.0), (25.0, 50.0)));
        assert!(r.intersects_segment((9.5, 0.0), (9.5, 40.0)));
    }

    #[test]
    fn window_bigger_than_image() {
        let set = EdgeSegmentSet {
            segments: vec![],
            source_dims: (50, 50),
        };
        assert!(matches!(
            sliding_topology(&set, (60, 10), (5, 5)),
            Err(MapError::WindowLargerThanImage { .. })
        ));
    }

    #[test]
    fn overlap_area() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(a.intersection_area(&Rect::new(5, 5, 10, 10)), 25);
        assert_eq!(a.intersection_area(&Rect::new(10, 0, 10, 10)), 0);
    }
}
