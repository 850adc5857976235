//! Synthetic depth scenes of C- and S-shaped wire parts with ground truth.

mod linking;
mod part;
mod placement;
mod render;

use nalgebra::{Isometry3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::UnknownStrategy;

pub use linking::{
    closed_polygon, linking_number, linking_number_with, min_distance, polyline,
    projected_crossings, ProjectedCrossing,
};
pub use part::{make_part, polyline_length, two_arc_curve, PartParams, PartShape, WirePart};
pub use placement::{
    registry, Overlapped, Placement, PlacementContext, RandomPile, Separated, Twisted, TwoRegion,
};
pub use render::{render_depth, silhouette, Camera, NoiseModel, Rendered};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("invalid part parameters: {0}")]
    InvalidParams(String),
    #[error("placement '{0}' failed after the maximum number of attempts")]
    PlacementFailed(String),
    #[error("placement '{placement}' needs {expected} parts, got {got}")]
    PartCount {
        placement: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Unknown(#[from] UnknownStrategy),
}

/// Which shapes make up a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    COnly,
    SOnly,
    Mixed,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::COnly, Pattern::SOnly, Pattern::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::COnly => "c_only",
            Pattern::SOnly => "s_only",
            Pattern::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn of(shapes: impl IntoIterator<Item = PartShape>) -> Self {
        let (mut c, mut s) = (false, false);
        for shape in shapes {
            match shape {
                PartShape::C => c = true,
                PartShape::S => s = true,
            }
        }
        match (c, s) {
            (_, false) => Pattern::COnly,
            (false, true) => Pattern::SOnly,
            (true, true) => Pattern::Mixed,
        }
    }
}

/// Geometric relation of two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTruth {
    pub i: usize,
    pub j: usize,
    /// Linking number of the closure-completed centerlines (not rounded).
    pub linking_number: f64,
    pub min_distance_mm: f64,
    pub crossings: usize,
    pub entangling: bool,
}

/// A top-down crossing of two different parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub part_i: usize,
    pub part_j: usize,
    /// Scene position of the crossing on the floor plane, mm.
    pub xy_mm: Vector2<f64>,
    pub upper_z_mm: f64,
    pub is_entangling: bool,
}

/// Posed parts and their ground-truth relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub placement: String,
    pub pattern: Pattern,
    pub parts: Vec<WirePart>,
    pub pairs: Vec<PairTruth>,
    pub crossings: Vec<Crossing>,
    /// Parts not entangled with any other part.
    pub free_part_ids: Vec<usize>,
}

impl SceneTruth {
    pub fn tangled_part_ids(&self) -> Vec<usize> {
        (0..self.parts.len())
            .filter(|i| !self.free_part_ids.contains(i))
            .collect()
    }
}

/// Two parts entangle when their closed centerlines link, or when they come
/// within three wire radii and cross at least twice seen from above (a hook).
pub fn is_entangling(linking_number: f64, min_distance_mm: f64, crossings: usize, wire_radius: f64) -> bool {
    linking_number.round() != 0.0 || (min_distance_mm < 3.0 * wire_radius && crossings >= 2)
}

/// Labels every part pair of already posed parts.
pub fn label_scene(placement: &str, parts: Vec<WirePart>) -> SceneTruth {
    let lines: Vec<_> = parts.iter().map(|p| p.centerline()).collect();
    let mut pairs = Vec::new();
    let mut crossings = Vec::new();
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            let lk = linking_number(&lines[i], &lines[j]).unwrap_or(0.0);
            let dist = min_distance(&lines[i], &lines[j]);
            let cross = projected_crossings(&lines[i], &lines[j]);
            let r = parts[i].wire_radius.max(parts[j].wire_radius);
            let entangling = is_entangling(lk, dist, cross.len(), r);
            crossings.extend(cross.iter().map(|c| Crossing {
                part_i: i,
                part_j: j,
                xy_mm: c.xy,
                upper_z_mm: c.upper_z,
                is_entangling: entangling,
            }));
            pairs.push(PairTruth {
                i,
                j,
                linking_number: lk,
                min_distance_mm: dist,
                crossings: cross.len(),
                entangling,
            });
        }
    }
    let free_part_ids = (0..parts.len())
        .filter(|&k| !pairs.iter().any(|p| p.entangling && (p.i == k || p.j == k)))
        .collect();
    SceneTruth {
        placement: placement.to_string(),
        pattern: Pattern::of(parts.iter().map(|p| p.shape)),
        parts,
        pairs,
        crossings,
        free_part_ids,
    }
}

/// Poses `parts` with `placement` and labels the result.
pub fn compose_scene(
    parts: &[WirePart],
    placement: &dyn Placement,
    ctx: &PlacementContext,
    seed: u64,
) -> Result<SceneTruth, SceneError> {
    if parts.is_empty() {
        return Err(SceneError::InvalidParams("a scene needs at least one part".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses: Vec<Isometry3<f64>> = placement.place(parts, ctx, &mut rng)?;
    let posed = parts.iter().zip(poses).map(|(p, pose)| p.with_pose(pose)).collect();
    Ok(label_scene(placement.name(), posed))
}

/// Everything needed to generate a scene from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub focal_px: f64,
    pub floor_mm: f64,
    /// Registered placement name.
    pub placement: String,
    pub pattern: Pattern,
    /// Number of parts for placements that accept any count.
    pub part_count: usize,
    pub c_params: PartParams,
    pub s_params: PartParams,
    pub noise: NoiseModel,
    pub margin_px: f64,
    pub separation_mm: f64,
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            focal_px: 1000.0,
            floor_mm: 1000.0,
            placement: "two_region".into(),
            pattern: Pattern::Mixed,
            part_count: 3,
            c_params: PartParams::c_default(),
            s_params: PartParams::s_default(),
            noise: NoiseModel::default(),
            margin_px: 8.0,
            separation_mm: 10.0,
            max_attempts: 2000,
        }
    }
}

impl SceneConfig {
    pub fn camera(&self) -> Camera {
        Camera::overhead(self.width, self.height, self.focal_px, self.floor_mm)
    }

    pub fn placement_context(&self) -> PlacementContext {
        PlacementContext {
            width_px: self.width,
            height_px: self.height,
            focal_px: self.focal_px,
            floor_mm: self.floor_mm,
            margin_px: self.margin_px,
            separation_mm: self.separation_mm,
            max_attempts: self.max_attempts,
        }
    }
}

fn shapes_for(pattern: Pattern, n: usize, rng: &mut ChaCha8Rng) -> Vec<PartShape> {
    match pattern {
        Pattern::COnly => vec![PartShape::C; n],
        Pattern::SOnly => vec![PartShape::S; n],
        Pattern::Mixed => {
            let mut shapes: Vec<PartShape> = (0..n)
                .map(|_| if rng.random_bool(0.5) { PartShape::C } else { PartShape::S })
                .collect();
            if n >= 2 && shapes.iter().all(|&s| s == shapes[0]) {
                let k = rng.random_range(0..n);
                shapes[k] = match shapes[k] {
                    PartShape::C => PartShape::S,
                    PartShape::S => PartShape::C,
                };
            }
            shapes
        }
    }
}

/// Builds parts, poses them and renders the depth image, all from `seed`.
pub fn generate(cfg: &SceneConfig, seed: u64) -> Result<(SceneTruth, Rendered), SceneError> {
    let placement = registry().create(&cfg.placement, &())?;
    generate_with(cfg, placement.as_ref(), seed)
}

pub fn generate_with(
    cfg: &SceneConfig,
    placement: &dyn Placement,
    seed: u64,
) -> Result<(SceneTruth, Rendered), SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = placement.part_count().unwrap_or(cfg.part_count);
    let parts = shapes_for(cfg.pattern, n, &mut rng)
        .into_iter()
        .map(|shape| {
            let params = match shape {
                PartShape::C => &cfg.c_params,
                PartShape::S => &cfg.s_params,
            };
            make_part(shape, params, rng.random())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let truth = compose_scene(&parts, placement, &cfg.placement_context(), rng.random())?;
    let rendered = render_depth(&truth, &cfg.camera(), &cfg.noise, rng.random());
    Ok((truth, rendered))
}
