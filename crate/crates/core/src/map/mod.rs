//! Entanglement map: sliding-window writhe and density blended with the
//! center mask into a per-pixel likelihood of entanglement.

mod window;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::DepthImage;
use crate::edge::{extract, EdgeConfig, EdgeError, EdgeSegmentSet};
use crate::gli::{
    center_mask, registry as gli_registry, writhe_matrix_with, CenterMask, GliConfig, GliError,
    TopologyCoordinate, WritheMatrix,
};
use crate::grid::{Grid, Mask};
use crate::registry::UnknownStrategy;

pub use window::{
    members, sliding_topology, sliding_topology_with, sub_coordinate, window_origins, Rect,
    WindowCell, WindowGrid,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("window {window:?} does not fit image {image:?}")]
    WindowLargerThanImage {
        window: (usize, usize),
        image: (usize, usize),
    },
    #[error("stride must be positive, got {0:?}")]
    InvalidStride((usize, usize)),
    #[error("mask is {mask:?} but the map is {map:?}")]
    DimensionMismatch {
        mask: (usize, usize),
        map: (usize, usize),
    },
    #[error("invalid map weights ({0}, {1}, {2}): each must be >= 0 and they must sum to 1")]
    InvalidWeights(f64, f64, f64),
    #[error(transparent)]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Gli(#[from] GliError),
    #[error(transparent)]
    Kernel(#[from] UnknownStrategy),
}

/// Weights of window writhe, window density and center mask in the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapWeights {
    pub sigma_w: f64,
    pub sigma_d: f64,
    pub sigma_c: f64,
}

impl Default for MapWeights {
    fn default() -> Self {
        Self {
            sigma_w: 0.8,
            sigma_d: 0.15,
            sigma_c: 0.05,
        }
    }
}

/// Largest density weight adaptation may produce.
pub const MAX_SIGMA_D: f64 = 0.5;

/// `1 − a − b`, correctly rounded.
fn one_minus(a: f64, b: f64) -> f64 {
    // Neumaier summation of [1, −a, −b].
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in [1.0, -a, -b] {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

impl MapWeights {
    pub fn new(sigma_w: f64, sigma_d: f64, sigma_c: f64) -> Result<Self, MapError> {
        let w = Self {
            sigma_w,
            sigma_d,
            sigma_c,
        };
        if w.is_valid() {
            Ok(w)
        } else {
            Err(MapError::InvalidWeights(sigma_w, sigma_d, sigma_c))
        }
    }

    pub fn is_valid(&self) -> bool {
        let all = [self.sigma_w, self.sigma_d, self.sigma_c];
        all.iter().all(|v| v.is_finite() && *v >= 0.0)
            && (self.sigma_w + self.sigma_d + self.sigma_c - 1.0).abs() <= 1e-12
    }
}

/// Raises the density weight when windows are on average denser than the
/// whole scene: `σd* = (mean(Ds) / d)·σd` (capped at [`MAX_SIGMA_D`]) and
/// `σw* = 1 − σd* − σc`. A zero `global_d` leaves the weights unchanged.
pub fn adapt_weights(initial: &MapWeights, grid: &WindowGrid, global_d: f64) -> MapWeights {
    adapt_weights_for_mean(initial, grid.mean_density(), global_d)
}

/// [`adapt_weights`] given the mean window density directly.
pub fn adapt_weights_for_mean(initial: &MapWeights, mean_d: f64, global_d: f64) -> MapWeights {
    if !(global_d > 0.0 && mean_d > global_d) {
        return *initial;
    }
    let sigma_d = (mean_d / global_d * initial.sigma_d).min(MAX_SIGMA_D);
    MapWeights {
        sigma_w: one_minus(sigma_d, initial.sigma_c),
        sigma_d,
        sigma_c: initial.sigma_c,
    }
}

/// Per-pixel entanglement likelihood in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementMap {
    pub values: Grid<f64>,
}

impl EntanglementMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            values: Grid::new(width, height, 0.0),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[(x, y)]
    }

    pub fn mean(&self) -> f64 {
        let d = self.values.data();
        d.iter().sum::<f64>() / d.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.data().iter().copied().fold(0.0, f64::max)
    }

    /// Mean over the pixels of `rect`.
    pub fn mean_in(&self, rect: &Rect) -> f64 {
        let mut sum = 0.0;
        for y in rect.y..rect.y + rect.h {
            sum += self.values.row(y)[rect.x..rect.x + rect.w].iter().sum::<f64>();
        }
        sum / rect.area() as f64
    }

    /// Mean over the set pixels of `mask`, `None` when the mask is empty.
    pub fn mean_over(&self, mask: &Mask) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for (&v, &m) in self.values.data().iter().zip(mask.data()) {
            if m {
                sum += v;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// Rescales to `[0, 1]`; a constant grid maps to all zeros.
pub fn min_max_normalize(g: &Grid<f64>) -> Grid<f64> {
    let lo = g.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return g.map(|_| 0.0);
    }
    g.map(|&v| (v - lo) / (hi - lo))
}

/// For each output coordinate: the two sample indices around it and the
/// weight of the second. Outside the outermost samples the nearest one is used.
fn interpolation_axis(centers: &[f64], len: usize) -> Vec<(usize, usize, f64)> {
    (0..len)
        .map(|p| {
            let p = p as f64;
            let last = centers.len() - 1;
            if p <= centers[0] {
                return (0, 0, 0.0);
            }
            if p >= centers[last] {
                return (last, last, 0.0);
            }
            let hi = centers.partition_point(|&c| c <= p);
            let lo = hi - 1;
            let t = (p - centers[lo]) / (centers[hi] - centers[lo]);
            (lo, hi, t)
        })
        .collect()
}

/// Bilinear upsampling of a cell grid whose samples sit at the window centers.
pub fn upsample(cells: &Grid<f64>, grid: &WindowGrid) -> Grid<f64> {
    let (w, h) = grid.image_dims;
    let cx: Vec<f64> = grid.xs.iter().map(|&x| x as f64 + (grid.window_px.0 as f64 - 1.0) / 2.0).collect();
    let cy: Vec<f64> = grid.ys.iter().map(|&y| y as f64 + (grid.window_px.1 as f64 - 1.0) / 2.0).collect();
    let ax = interpolation_axis(&cx, w);
    let ay = interpolation_axis(&cy, h);
    Grid::from_fn(w, h, |x, y| {
        let (x0, x1, tx) = ax[x];
        let (y0, y1, ty) = ay[y];
        let top = cells[(x0, y0)] * (1.0 - tx) + cells[(x1, y0)] * tx;
        let bottom = cells[(x0, y1)] * (1.0 - tx) + cells[(x1, y1)] * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// `E = σw·W + σd·D + σc·C`, with `W` and `D` the min-max normalized window
/// grids upsampled to image resolution, clamped to `[0, 1]`.
pub fn compose_map(
    grid: &WindowGrid,
    mask: &CenterMask,
    weights: &MapWeights,
) -> Result<EntanglementMap, MapError> {
    if mask.dims() != grid.image_dims {
        return Err(MapError::DimensionMismatch {
            mask: mask.dims(),
            map: grid.image_dims,
        });
    }
    if !weights.is_valid() {
        return Err(MapError::InvalidWeights(
            weights.sigma_w,
            weights.sigma_d,
            weights.sigma_c,
        ));
    }
    let ws = upsample(&min_max_normalize(&grid.writhe_grid()), grid);
    let ds = upsample(&min_max_normalize(&grid.density_grid()), grid);
    let (w, h) = grid.image_dims;
    let values = Grid::from_fn(w, h, |x, y| {
        let c = if mask[(x, y)] { 1.0 } else { 0.0 };
        let e = weights.sigma_w * ws[(x, y)] + weights.sigma_d * ds[(x, y)] + weights.sigma_c * c;
        e.clamp(0.0, 1.0)
    });
    Ok(EntanglementMap { values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub edge: EdgeConfig,
    pub gli: GliConfig,
    /// Window size in pixels; `None` uses a quarter of each image dimension.
    pub window_px: Option<(usize, usize)>,
    /// Window step; `None` uses half the window.
    pub stride_px: Option<(usize, usize)>,
    pub weights: MapWeights,
    /// Disk radius used to dilate the center segments into the center mask.
    pub center_dilation_px: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            edge: EdgeConfig::default(),
            gli: GliConfig::default(),
            window_px: None,
            stride_px: None,
            weights: MapWeights::default(),
            center_dilation_px: 8,
        }
    }
}

impl MapConfig {
    pub fn window_for(&self, dims: (usize, usize)) -> (usize, usize) {
        self.window_px
            .unwrap_or(((dims.0 / 4).max(1), (dims.1 / 4).max(1)))
    }

    pub fn stride_for(&self, dims: (usize, usize)) -> (usize, usize) {
        let win = self.window_for(dims);
        self.stride_px
            .unwrap_or(((win.0 / 2).max(1), (win.1 / 2).max(1)))
    }
}

/// Scene topology and the map built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub segments: EdgeSegmentSet,
    /// `None` when fewer than two segments were found.
    pub matrix: Option<WritheMatrix>,
    pub coordinate: TopologyCoordinate,
    pub center_mask: CenterMask,
    pub grid: WindowGrid,
    pub weights: MapWeights,
    pub map: EntanglementMap,
}

/// Whole-scene topology: edge segments, writhe matrix and coordinate.
pub fn scene_topology(
    img: &DepthImage,
    cfg: &MapConfig,
) -> Result<(EdgeSegmentSet, Option<WritheMatrix>, TopologyCoordinate), MapError> {
    let segments = extract(img, &cfg.edge)?;
    if segments.len() < 2 {
        return Ok((segments, None, TopologyCoordinate::ZERO));
    }
    let kernel = gli_registry().create(&cfg.gli.kernel, &cfg.gli)?;
    let t = writhe_matrix_with(&segments.segments, kernel.as_ref())?;
    let coordinate = TopologyCoordinate::from_matrix(&t);
    Ok((segments, Some(t), coordinate))
}

/// Edges → segments → coordinate and center mask → window grid → adapted
/// weights → map. With fewer than two segments the coordinate and map are zero.
pub fn generate(img: &DepthImage, cfg: &MapConfig) -> Result<MapOutput, MapError> {
    let (segments, matrix, coordinate) = scene_topology(img, cfg)?;
    generate_from(img.dims(), segments, matrix, coordinate, cfg)
}

/// Map construction from an already computed scene topology.
pub fn generate_from(
    dims: (usize, usize),
    segments: EdgeSegmentSet,
    matrix: Option<WritheMatrix>,
    coordinate: TopologyCoordinate,
    cfg: &MapConfig,
) -> Result<MapOutput, MapError> {
    let window = cfg.window_for(dims);
    let stride = cfg.stride_for(dims);
    let grid = sliding_topology_with(&segments, matrix.as_ref(), window, stride)?;
    let center_mask = match coordinate.center {
        Some(c) => center_mask(&segments.segments, c, dims, cfg.center_dilation_px)?,
        None => Mask::new(dims.0, dims.1, false),
    };
    let weights = adapt_weights(&cfg.weights, &grid, coordinate.density);
    let map = if matrix.is_some() {
        compose_map(&grid, &center_mask, &weights)?
    } else {
        EntanglementMap::zeros(dims.0, dims.1)
    };
    Ok(MapOutput {
        segments,
        matrix,
        coordinate,
        center_mask,
        grid,
        weights,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptation_examples() {
        let w0 = MapWeights::default();
        assert_eq!(adapt_weights_for_mean(&w0, 0.1, 0.15), w0);
        let w = adapt_weights_for_mean(&w0, 0.3, 0.15);
        assert_eq!((w.sigma_w, w.sigma_d, w.sigma_c), (0.65, 0.30, 0.05));
        let w = adapt_weights_for_mean(&w0, 0.9, 0.01);
        assert_eq!((w.sigma_w, w.sigma_d, w.sigma_c), (0.45, 0.5, 0.05));
        assert_eq!(adapt_weights_for_mean(&w0, 0.9, 0.0), w0);
    }

    #[test]
    fn one_hot_window_peaks_at_its_center() {
        let mut grid = WindowGrid::empty((41, 41), (11, 11), (5, 5)).unwrap();
        grid.cells[(3, 2)].writhe = 0.7;
        let mask = Mask::new(41, 41, false);
        let w = MapWeights::new(1.0, 0.0, 0.0).unwrap();
        let map = compose_map(&grid, &mask, &w).unwrap();
        assert_eq!(grid.rect(3, 2).center(), (20.0, 15.0));
        assert_eq!(map.get(20, 15), 1.0);
        assert_eq!(map.max(), 1.0);
        assert_eq!(map.get(21, 15), 0.8);
        assert_eq!(map.get(20, 18), 0.4);
        assert_eq!(map.get(25, 15), 0.0);
        assert_eq!(map.get(0, 0), 0.0);
    }

    #[test]
    fn constant_writhe_gives_constant_map() {
        let mut grid = WindowGrid::empty((30, 20), (10, 10), (5, 5)).unwrap();
        for c in grid.cells.data_mut() {
            c.writhe = 0.4;
        }
        let mask = Mask::new(30, 20, false);
        let map = compose_map(&grid, &mask, &MapWeights::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(map.values.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mask_dimensions_are_checked() {
        let grid = WindowGrid::empty((30, 20), (10, 10), (5, 5)).unwrap();
        let mask = Mask::new(20, 20, false);
        assert!(matches!(
            compose_map(&grid, &mask, &MapWeights::default()),
            Err(MapError::DimensionMismatch { .. })
        ));
    }
}
