//! `plan`, `gen` and `eval`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tanglemap_core::depth::DepthImage;
use tanglemap_core::grasp::{labels_under_contact, GraspCandidate};
use tanglemap_core::map::EntanglementMap;
use tanglemap_core::planner::{plan, GatePath, PlanError, PlanResult};
use tanglemap_core::scenegen::{generate, Camera, Pattern, SceneTruth};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io;

/// Contents of `grasps.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspsFile {
    pub path: GatePath,
    pub grasps: Vec<GraspCandidate>,
}

/// Contents of `coordinate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateFile {
    pub path: GatePath,
    pub writhe_gate: f64,
    pub writhe: f64,
    pub density: f64,
    pub center: Option<(usize, usize)>,
    /// Unknown when planning stopped without a grasp.
    pub segment_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn load_depth(path: &Path, cfg: &RunConfig) -> Result<DepthImage, CliError> {
    io::read_depth_png(path, |w, h| cfg.camera.intrinsics(w, h), cfg.camera.max_range_mm)
}

/// Plans on one depth PNG and writes all artifacts to `out`.
pub fn cmd_plan(depth_path: &Path, cfg: &RunConfig, out: &Path) -> Result<PlanResult, CliError> {
    let img = load_depth(depth_path, cfg)?;
    ensure_dir(out)?;
    let start = Instant::now();
    let result = plan(&img, &cfg.planner);
    let elapsed = ms(start);
    io::write_json(&out.join("plan.timing.json"), &Timing { elapsed_ms: elapsed })?;
    let res = match result {
        Ok(r) => r,
        Err(PlanError::NoGraspFound { path, coordinate }) => {
            warn!("no grasp found on the {} path", path.name());
            io::write_json(
                &out.join("coordinate.json"),
                &CoordinateFile {
                    path,
                    writhe_gate: cfg.planner.writhe_gate,
                    writhe: coordinate.writhe,
                    density: coordinate.density,
                    center: coordinate.center,
                    segment_count: None,
                },
            )?;
            return Err(PlanError::NoGraspFound { path, coordinate }.into());
        }
        Err(e) => return Err(e.into()),
    };
    info!(
        "{} path, writhe {:.4}, {} candidates in {:.0} ms",
        res.gate_taken.name(),
        res.coordinate.writhe,
        res.candidates.len(),
        elapsed
    );
    write_plan_artifacts(&img, &res, cfg, out)?;
    Ok(res)
}

fn write_plan_artifacts(img: &DepthImage, res: &PlanResult, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    io::write_json(
        &out.join("grasps.json"),
        &GraspsFile {
            path: res.gate_taken,
            grasps: res.candidates.clone(),
        },
    )?;
    io::write_json(
        &out.join("coordinate.json"),
        &CoordinateFile {
            path: res.gate_taken,
            writhe_gate: cfg.planner.writhe_gate,
            writhe: res.coordinate.writhe,
            density: res.coordinate.density,
            center: res.coordinate.center,
            segment_count: Some(res.segment_count),
        },
    )?;
    let (w, h) = img.dims();
    let zeros;
    let map = match &res.map {
        Some(m) => m,
        None => {
            zeros = EntanglementMap::zeros(w, h);
            &zeros
        }
    };
    io::save_rgb(&out.join("map.png"), &io::map_image(map))?;
    let grasp = &cfg.planner.grasp;
    io::save_rgb(
        &out.join("overlay.png"),
        &io::overlay_image(img, &res.candidates, grasp.hand, grasp.rotations, 5),
    )?;
    io::save_rgb(&out.join("writhe_matrix.png"), &io::writhe_matrix_image(res.matrix.as_ref()))?;
    Ok(())
}

/// Ground truth written next to each generated depth image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub depth_png: String,
    pub labels_png: String,
    pub camera: Camera,
    /// Crossing positions projected into the image, same order as `scene.crossings`.
    pub crossings_px: Vec<(f64, f64)>,
    pub scene: SceneTruth,
}

fn scene_name(i: usize) -> String {
    format!("scene_{i:04}")
}

/// Writes `count` scenes: depth PNG, label PNG and truth JSON each.
pub fn cmd_gen(cfg: &RunConfig, out: &Path, count: usize) -> Result<(), CliError> {
    ensure_dir(out)?;
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in 0..count {
        let seed: u64 = seeds.random();
        let (truth, rendered) = generate(&cfg.scene, seed)?;
        let name = scene_name(i);
        let camera = cfg.scene.camera();
        let depth_png = format!("{name}.png");
        let labels_png = format!("{name}.labels.png");
        io::write_depth_png(&out.join(&depth_png), &rendered.depth)?;
        io::write_labels_png(&out.join(&labels_png), &rendered.labels)?;
        let crossings_px = truth
            .crossings
            .iter()
            .map(|c| {
                let p = camera.project_scene(&nalgebra::Vector3::new(c.xy_mm.x, c.xy_mm.y, c.upper_z_mm));
                (p.x, p.y)
            })
            .collect();
        io::write_json(
            &out.join(format!("{name}.truth.json")),
            &TruthFile {
                seed,
                depth_png,
                labels_png,
                camera,
                crossings_px,
                scene: truth,
            },
        )?;
        info!("wrote {name}");
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub scenes: usize,
    pub successes: usize,
    pub success_rate: f64,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.scenes += 1;
        self.successes += ok as usize;
        self.success_rate = self.successes as f64 / self.scenes as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneResult {
    pub scene: String,
    pub pattern: Pattern,
    pub path: GatePath,
    pub writhe: f64,
    /// Top grasp position, absent when no grasp was found.
    pub top: Option<(usize, usize)>,
    /// Parts under the top grasp's contact region.
    pub parts: Vec<usize>,
    pub success: bool,
}

/// Structured evaluation report; latency is written separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rank_alpha: f64,
    pub writhe_gate: f64,
    pub overall: Tally,
    pub patterns: BTreeMap<String, Tally>,
    pub paths: BTreeMap<String, usize>,
    pub no_grasp: usize,
    pub results: Vec<SceneResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTiming {
    pub scenes: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub per_scene_ms: Vec<f64>,
}

/// `report.json` → `report.timing.json`.
pub fn timing_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}.timing.json"))
}

fn truth_files(corpus: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(corpus).map_err(|e| CliError::io(corpus, e))?;
    let mut files = Vec::new();
    let mut depth_pngs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(corpus, e))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(".truth.json") {
            files.push(path);
        } else if name.ends_with(".png") && !name.ends_with(".labels.png") {
            depth_pngs.push(name);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::MissingTruth(format!("no *.truth.json files in {}", corpus.display())));
    }
    for png in depth_pngs {
        let stem = png.trim_end_matches(".png");
        if !corpus.join(format!("{stem}.truth.json")).exists() {
            return Err(CliError::MissingTruth(format!("{png} has no {stem}.truth.json")));
        }
    }
    Ok(files)
}

/// Plans on every scene of a generated corpus and judges whether the top
/// grasp lands on a part that is not entangled with any other: every part
/// between the fingers must be free, and there must be at least one.
pub fn cmd_eval(corpus: &Path, cfg: &RunConfig, report_path: &Path) -> Result<EvalReport, CliError> {
    let files = truth_files(corpus)?;
    let templates = cfg.planner.grasp.templates().map_err(PlanError::from)?;
    let mut report = EvalReport {
        rank_alpha: cfg.planner.rank_alpha,
        writhe_gate: cfg.planner.writhe_gate,
        overall: Tally::default(),
        patterns: BTreeMap::new(),
        paths: BTreeMap::new(),
        no_grasp: 0,
        results: Vec::new(),
    };
    let mut times = Vec::new();
    for file in &files {
        let truth: TruthFile = io::read_json(file)?;
        let depth_path = corpus.join(&truth.depth_png);
        let img = io::read_depth_png(&depth_path, |_, _| truth.camera.intrinsics, cfg.camera.max_range_mm)?;
        let labels = io::read_labels_png(&corpus.join(&truth.labels_png))?;
        if labels.dims() != img.dims() {
            return Err(CliError::Input(format!("{}: label image size differs from depth", truth.labels_png)));
        }
        let start = Instant::now();
        let outcome = plan(&img, &cfg.planner);
        times.push(ms(start));
        let scene = truth.depth_png.trim_end_matches(".png").to_string();
        let result = match outcome {
            Ok(res) => {
                let top = res.candidates[0];
                let parts: Vec<usize> = labels_under_contact(&labels, &templates[top.rotation_index], top.x, top.y)
                    .into_iter()
                    .map(|l| l as usize - 1)
                    .collect();
                let success = !parts.is_empty() && parts.iter().all(|p| truth.scene.free_part_ids.contains(p));
                SceneResult {
                    scene,
                    pattern: truth.scene.pattern,
                    path: res.gate_taken,
                    writhe: res.coordinate.writhe,
                    top: Some((top.x, top.y)),
                    parts,
                    success,
                }
            }
            Err(PlanError::NoGraspFound { path, coordinate }) => {
                report.no_grasp += 1;
                SceneResult {
                    scene,
                    pattern: truth.scene.pattern,
                    path,
                    writhe: coordinate.writhe,
                    top: None,
                    parts: Vec::new(),
                    success: false,
                }
            }
            Err(e) => return Err(e.into()),
        };
        report.overall.add(result.success);
        report
            .patterns
            .entry(result.pattern.name().to_string())
            .or_default()
            .add(result.success);
        *report.paths.entry(result.path.name().to_string()).or_default() += 1;
        report.results.push(result);
    }
    if let Some(dir) = report_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    io::write_json(report_path, &report)?;
    let timing = EvalTiming {
        scenes: times.len(),
        mean_ms: times.iter().sum::<f64>() / times.len() as f64,
        max_ms: times.iter().copied().fold(0.0, f64::max),
        per_scene_ms: times,
    };
    io::write_json(&timing_path(report_path), &timing)?;
    info!(
        "{} scenes, success rate {:.3}, mean latency {:.0} ms",
        report.overall.scenes, report.overall.success_rate, timing.mean_ms
    );
    Ok(report)
}
