//! From a depth image to straight 3D edge segments.

mod detect;
mod fit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::DepthImage;
use crate::gli::Segment3D;

pub use detect::{
    depth_gradient, detect_edges, detect_edges_with, hysteresis, non_max_suppress, Gradient,
};
pub use fit::{
    fit_pixel_segments, fit_segments, merge_collinear, split_chain, subdivide, trace_chains, Pixel,
};

pub const DEFAULT_LOW_RATIO: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdgeError {
    #[error("depth image has no valid pixels")]
    EmptyImage,
    #[error("invalid gradient threshold {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeConfig {
    /// High hysteresis threshold on the depth gradient, mm/px.
    pub grad_threshold: f64,
    /// Low threshold as a fraction of the high one.
    pub low_ratio: f64,
    /// Pieces shorter than this (pixels) are dropped.
    pub min_len_px: f64,
    /// Maximum perpendicular deviation of chain pixels from their chord.
    pub fit_tol_px: f64,
    /// Neighbors turning by less than this are merged when they still fit.
    pub merge_angle_deg: f64,
    /// Longer pieces are cut into equal parts; `None` disables subdivision.
    pub max_seg_len_px: Option<f64>,
    /// Lifted segments shorter than this (mm) are dropped.
    pub min_len_mm: f64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            grad_threshold: 2.5,
            low_ratio: DEFAULT_LOW_RATIO,
            min_len_px: 8.0,
            fit_tol_px: 2.0,
            merge_angle_deg: 5.0,
            max_seg_len_px: Some(40.0),
            min_len_mm: 1.0,
        }
    }
}

/// Segments extracted from one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSegmentSet {
    pub segments: Vec<Segment3D>,
    pub source_dims: (usize, usize),
}

impl EdgeSegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Edge detection followed by segment fitting.
pub fn extract(img: &DepthImage, cfg: &EdgeConfig) -> Result<EdgeSegmentSet, EdgeError> {
    let edges = detect_edges_with(img, cfg.grad_threshold, cfg.low_ratio)?;
    Ok(fit_segments(&edges, img, cfg))
}
