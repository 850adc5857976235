//! Entanglement-aware grasp planning from a single depth image.
//!
//! Edge segments extracted from the depth map are compared pairwise with the
//! Gaussian link integral. The resulting writhe matrix yields a topology
//! coordinate (writhe, density, center) for the whole scene and for sliding
//! windows, which are blended into an entanglement map. Grasp candidates from
//! a parallel-jaw graspability search are then restricted to, and ranked by,
//! low-entanglement regions.
//!
//! [`scenegen`] renders synthetic wire-part piles with ground truth for testing.

pub mod depth;
pub mod edge;
pub mod gli;
pub mod grasp;
pub mod grid;
pub mod map;
pub mod planner;
pub mod registry;
pub mod scenegen;
