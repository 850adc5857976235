//! Grasp planning: a writhe gate picks between plain collision-aware grasping
//! and searching the least entangled regions of the entanglement map.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::DepthImage;
use crate::gli::{TopologyCoordinate, WritheMatrix};
use crate::grasp::{detect, detect_in_region, GraspCandidate, GraspConfig, GraspError};
use crate::map::{generate_from, scene_topology, window_origins, EntanglementMap, MapConfig, MapError, Rect};
use crate::registry::{Registry, UnknownStrategy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no collision-free grasp found ({path:?} path, writhe {:.4})", coordinate.writhe)]
    NoGraspFound {
        path: GatePath,
        coordinate: TopologyCoordinate,
    },
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Grasp(#[from] GraspError),
    #[error(transparent)]
    Unknown(#[from] UnknownStrategy),
}

/// Which branch of the writhe gate a plan took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatePath {
    TangleAware,
    Direct,
}

impl GatePath {
    pub fn name(self) -> &'static str {
        match self {
            GatePath::TangleAware => "tangle_aware",
            GatePath::Direct => "direct",
        }
    }
}

/// Orders candidates; implementations fill in `score`.
pub trait Ranker: Send + Sync {
    fn name(&self) -> &'static str;
    fn score(&self, cands: &mut [GraspCandidate]);
    /// A ranker that gives entanglement no weight also skips region
    /// selection: candidates then come from the whole image.
    fn uses_entanglement(&self) -> bool {
        true
    }
}

fn max_graspability(cands: &[GraspCandidate]) -> f64 {
    cands.iter().map(|c| c.graspability).fold(0.0, f64::max)
}

/// `α·(1 − e) + (1 − α)·g / max(g)`.
#[derive(Debug, Clone, Copy)]
pub struct Blend {
    pub alpha: f64,
}

impl Ranker for Blend {
    fn name(&self) -> &'static str {
        "blend"
    }

    fn score(&self, cands: &mut [GraspCandidate]) {
        let gmax = max_graspability(cands);
        for c in cands {
            let g = if gmax > 0.0 { c.graspability / gmax } else { 0.0 };
            c.score = self.alpha * (1.0 - c.entanglement) + (1.0 - self.alpha) * g;
        }
    }

    fn uses_entanglement(&self) -> bool {
        self.alpha > 0.0
    }
}

/// Graspability alone, scaled by the best candidate.
#[derive(Debug, Clone, Copy)]
pub struct GraspabilityOnly;

impl Ranker for GraspabilityOnly {
    fn name(&self) -> &'static str {
        "graspability"
    }

    fn score(&self, cands: &mut [GraspCandidate]) {
        let gmax = max_graspability(cands);
        for c in cands {
            c.score = if gmax > 0.0 { c.graspability / gmax } else { 0.0 };
        }
    }

    fn uses_entanglement(&self) -> bool {
        false
    }
}

/// Rankers by name; the factory receives the blend weight.
pub fn rankers() -> Registry<dyn Ranker, f64> {
    let mut r: Registry<dyn Ranker, f64> = Registry::new("ranker");
    r.register("blend", |&alpha| Box::new(Blend { alpha }))
        .register("graspability", |_| Box::new(GraspabilityOnly));
    r
}

/// Scores with `ranker`, then sorts by score descending; ties go to lower
/// entanglement, then smaller row, then smaller column.
pub fn rank_with(mut cands: Vec<GraspCandidate>, ranker: &dyn Ranker) -> Vec<GraspCandidate> {
    ranker.score(&mut cands);
    cands.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.entanglement.total_cmp(&b.entanglement))
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
            .then(a.rotation_index.cmp(&b.rotation_index))
    });
    cands
}

pub fn rank(cands: Vec<GraspCandidate>, alpha: f64) -> Vec<GraspCandidate> {
    rank_with(cands, &Blend { alpha })
}

/// Windows of the sliding grid (stride half the window) from lowest to
/// highest mean map value, ties in row-major order.
pub fn windows_by_mean(map: &EntanglementMap, window_px: (usize, usize)) -> Vec<(Rect, f64)> {
    let (w, h) = map.dims();
    let (ww, wh) = (window_px.0.clamp(1, w), window_px.1.clamp(1, h));
    let xs = window_origins(w, ww, (ww / 2).max(1));
    let ys = window_origins(h, wh, (wh / 2).max(1));
    let mut out: Vec<(Rect, f64)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Rect::new(x, y, ww, wh)))
        .map(|r| (r, map.mean_in(&r)))
        .collect();
    // Stable sort keeps row-major order among equal means.
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

fn overlaps_too_much(a: &Rect, b: &Rect) -> bool {
    2 * a.intersection_area(b) > a.area()
}

/// The `k` lowest-mean windows, skipping any window that overlaps an
/// already chosen one by more than half its area.
pub fn select_regions(map: &EntanglementMap, window_px: (usize, usize), k: usize) -> Vec<Rect> {
    let mut chosen: Vec<Rect> = Vec::new();
    for (r, _) in windows_by_mean(map, window_px) {
        if chosen.len() >= k {
            break;
        }
        if !chosen.iter().any(|c| overlaps_too_much(&r, c)) {
            chosen.push(r);
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub map: MapConfig,
    pub grasp: GraspConfig,
    /// Scenes with writhe at or below this go straight to grasp detection.
    pub writhe_gate: f64,
    /// Region size; `None` uses the map's window.
    pub region_window_px: Option<(usize, usize)>,
    pub regions_k: usize,
    pub top_k_per_region: usize,
    pub rank_alpha: f64,
    /// Registered ranker used on the tangle-aware path.
    pub ranker: String,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            map: MapConfig::default(),
            grasp: GraspConfig::default(),
            writhe_gate: 0.03,
            region_window_px: None,
            regions_k: 3,
            top_k_per_region: 5,
            rank_alpha: 0.7,
            ranker: "blend".into(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.regions_k == 0 {
            return Err(PlanError::InvalidConfig("regions_k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rank_alpha) {
            return Err(PlanError::InvalidConfig(format!(
                "rank_alpha must be in [0, 1], got {}",
                self.rank_alpha
            )));
        }
        if !self.writhe_gate.is_finite() {
            return Err(PlanError::InvalidConfig("writhe_gate must be finite".into()));
        }
        if !self.map.weights.is_valid() {
            let w = self.map.weights;
            return Err(MapError::InvalidWeights(w.sigma_w, w.sigma_d, w.sigma_c).into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub gate_taken: GatePath,
    pub coordinate: TopologyCoordinate,
    pub segment_count: usize,
    pub matrix: Option<WritheMatrix>,
    /// Present exactly on the tangle-aware path.
    pub map: Option<EntanglementMap>,
    /// Regions that produced candidates, in search order.
    pub regions: Vec<Rect>,
    /// Best first.
    pub candidates: Vec<GraspCandidate>,
}

/// Runs the full pipeline on one depth image.
pub fn plan(img: &DepthImage, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    let (segments, matrix, coordinate) = scene_topology(img, &cfg.map)?;
    let segment_count = segments.len();

    if coordinate.writhe <= cfg.writhe_gate {
        let grasp = GraspConfig {
            top_k: cfg.top_k_per_region * cfg.regions_k,
            ..cfg.grasp
        };
        let cands = rank_with(detect(img, &grasp)?, &GraspabilityOnly);
        if cands.is_empty() {
            return Err(PlanError::NoGraspFound {
                path: GatePath::Direct,
                coordinate,
            });
        }
        return Ok(PlanResult {
            gate_taken: GatePath::Direct,
            coordinate,
            segment_count,
            matrix,
            map: None,
            regions: Vec::new(),
            candidates: cands,
        });
    }

    let ranker = rankers().create(&cfg.ranker, &cfg.rank_alpha)?;
    let out = generate_from(img.dims(), segments, matrix, coordinate, &cfg.map)?;
    let map = out.map;
    let window = cfg.region_window_px.unwrap_or_else(|| cfg.map.window_for(img.dims()));
    let (regions, cands) = if ranker.uses_entanglement() {
        let grasp = GraspConfig {
            top_k: cfg.top_k_per_region,
            ..cfg.grasp
        };
        search_regions(img, &map, window, cfg.regions_k, &grasp)?
    } else {
        let grasp = GraspConfig {
            top_k: cfg.top_k_per_region * cfg.regions_k,
            ..cfg.grasp
        };
        let mut cands = detect(img, &grasp)?;
        for c in &mut cands {
            c.entanglement = map.get(c.x, c.y);
        }
        (Vec::new(), cands)
    };
    if cands.is_empty() {
        return Err(PlanError::NoGraspFound {
            path: GatePath::TangleAware,
            coordinate,
        });
    }
    let cands = rank_with(cands, ranker.as_ref());
    Ok(PlanResult {
        gate_taken: GatePath::TangleAware,
        coordinate,
        segment_count,
        matrix: out.matrix,
        map: Some(map),
        regions,
        candidates: cands,
    })
}

/// Walks windows from the lowest mean map value upwards and detects grasps
/// in each until `k` of them have produced candidates. Windows whose mean is
/// above the map mean are only tried when no window at or below it yields
/// any. A window overlapping an already productive one by more than half is skipped.
fn search_regions(
    img: &DepthImage,
    map: &EntanglementMap,
    window: (usize, usize),
    k: usize,
    grasp: &GraspConfig,
) -> Result<(Vec<Rect>, Vec<GraspCandidate>), PlanError> {
    let mean = map.mean();
    let ordered = windows_by_mean(map, window);
    let (low, high): (Vec<_>, Vec<_>) = ordered.into_iter().partition(|(_, m)| *m <= mean);
    let mut regions: Vec<Rect> = Vec::new();
    let mut cands: Vec<GraspCandidate> = Vec::new();
    let mut seen = HashSet::new();
    for tier in [low, high] {
        for (rect, _) in tier {
            if regions.len() >= k {
                break;
            }
            if regions.iter().any(|c| overlaps_too_much(&rect, c)) {
                continue;
            }
            let found = detect_in_region(img, grasp, &rect)?;
            if found.is_empty() {
                continue;
            }
            regions.push(rect);
            for mut c in found {
                if seen.insert((c.x, c.y, c.rotation_index)) {
                    c.entanglement = map.get(c.x, c.y);
                    cands.push(c);
                }
            }
        }
        if !cands.is_empty() {
            break;
        }
    }
    Ok((regions, cands))
}
