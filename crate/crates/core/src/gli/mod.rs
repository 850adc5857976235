//! Gaussian link integrals between edge segments and the topology coordinate
//! (writhe, density, center) built from them.

mod kernel;
mod segment;
mod topology;

use thiserror::Error;

pub use kernel::{
    gli_quadrature, gli_quadrature_with, gli_segments, gli_segments_with, registry, AnalyticGli,
    GliConfig, GliKernel, GliTolerance, QuadratureGli,
};
pub use segment::{closest_points, segment_distance, Segment3D, MIN_LEN_EPS};
pub use topology::{
    center, center_mask, density, writhe, writhe_matrix, writhe_matrix_with, CenterMask,
    TopologyCoordinate, WritheMatrix, SATURATED_GLI,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GliError {
    #[error("degenerate segment of length {length}")]
    DegenerateSegment { length: f64 },
    #[error("segments nearly intersect (distance {distance:e})")]
    NearSingular { distance: f64 },
    #[error("quadrature needs at least 2 subdivisions, got {0}")]
    InvalidSubdivisions(usize),
    #[error("writhe matrix needs at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("writhe matrix has no non-zero entry")]
    AllZeroMatrix,
    #[error("({0}, {1}) is not a valid center pair")]
    InvalidCenter(usize, usize),
    #[error("invalid writhe matrix entry ({i}, {j}) = {value}")]
    InvalidEntry { i: usize, j: usize, value: f64 },
}
