//! Flat `module.key = value` configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Every key has a
//! default; `tanglemap defaults` prints the full list.

use std::fmt::Write as _;
use std::path::Path;

use tanglemap_core::depth::Intrinsics;
use tanglemap_core::gli::registry as kernel_registry;
use tanglemap_core::planner::{rankers, PlannerConfig};
use tanglemap_core::scenegen::{registry as placement_registry, Pattern, SceneConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraConfig {
    pub focal_px: f64,
    /// Principal point; `None` is the image center.
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub max_range_mm: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            focal_px: 1000.0,
            cx: None,
            cy: None,
            max_range_mm: 2000.0,
        }
    }
}

impl CameraConfig {
    pub fn intrinsics(&self, width: usize, height: usize) -> Intrinsics {
        let c = Intrinsics::centered(width, height, self.focal_px);
        Intrinsics {
            cx: self.cx.unwrap_or(c.cx),
            cy: self.cy.unwrap_or(c.cy),
            ..c
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub camera: CameraConfig,
    pub planner: PlannerConfig,
    pub scene: SceneConfig,
}

trait Value: Sized {
    fn show(&self) -> String;
    fn parse(s: &str) -> Result<Self, String>;
}

macro_rules! number_value {
    ($($t:ty => $what:literal),*) => {$(
        impl Value for $t {
            fn show(&self) -> String {
                self.to_string()
            }
            fn parse(s: &str) -> Result<Self, String> {
                s.parse().map_err(|_| format!("expected {}, got '{s}'", $what))
            }
        }
    )*};
}

number_value!(f64 => "a number", usize => "a non-negative integer", u32 => "a non-negative integer", u64 => "a non-negative integer");

impl Value for bool {
    fn show(&self) -> String {
        self.to_string()
    }
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("expected true or false, got '{s}'")),
        }
    }
}

impl Value for String {
    fn show(&self) -> String {
        self.clone()
    }
    fn parse(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }
}

impl Value for Pattern {
    fn show(&self) -> String {
        self.name().to_string()
    }
    fn parse(s: &str) -> Result<Self, String> {
        Pattern::parse(s).ok_or_else(|| format!("expected c_only, s_only or mixed, got '{s}'"))
    }
}

impl Value for (usize, usize) {
    fn show(&self) -> String {
        format!("{}x{}", self.0, self.1)
    }
    fn parse(s: &str) -> Result<Self, String> {
        let err = || format!("expected WIDTHxHEIGHT or a single size, got '{s}'");
        match s.split_once('x') {
            Some((a, b)) => Ok((a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?)),
            None => {
                let v = s.parse().map_err(|_| err())?;
                Ok((v, v))
            }
        }
    }
}

impl<T: Value> Value for Option<T> {
    fn show(&self) -> String {
        match self {
            Some(v) => v.show(),
            None => "auto".into(),
        }
    }
    fn parse(s: &str) -> Result<Self, String> {
        if s == "auto" || s == "none" {
            Ok(None)
        } else {
            T::parse(s).map(Some)
        }
    }
}

struct Field {
    key: &'static str,
    get: fn(&RunConfig) -> String,
    set: fn(&mut RunConfig, &str) -> Result<(), String>,
}

macro_rules! field {
    ($key:literal, |$c:ident| $place:expr) => {
        Field {
            key: $key,
            get: |$c: &RunConfig| Value::show(&$place),
            set: |$c: &mut RunConfig, v: &str| {
                $place = Value::parse(v)?;
                Ok(())
            },
        }
    };
}

fn fields() -> Vec<Field> {
    vec![
        field!("run.seed", |c| c.seed),
        field!("camera.focal_px", |c| c.camera.focal_px),
        field!("camera.cx", |c| c.camera.cx),
        field!("camera.cy", |c| c.camera.cy),
        field!("camera.max_range_mm", |c| c.camera.max_range_mm),
        field!("edge.grad_threshold", |c| c.planner.map.edge.grad_threshold),
        field!("edge.low_ratio", |c| c.planner.map.edge.low_ratio),
        field!("edge.min_len_px", |c| c.planner.map.edge.min_len_px),
        field!("edge.fit_tol_px", |c| c.planner.map.edge.fit_tol_px),
        field!("edge.merge_angle_deg", |c| c.planner.map.edge.merge_angle_deg),
        field!("edge.max_seg_len_px", |c| c.planner.map.edge.max_seg_len_px),
        field!("edge.min_len_mm", |c| c.planner.map.edge.min_len_mm),
        field!("gli.kernel", |c| c.planner.map.gli.kernel),
        field!("gli.subdivisions", |c| c.planner.map.gli.subdivisions),
        field!("map.window_px", |c| c.planner.map.window_px),
        field!("map.stride_px", |c| c.planner.map.stride_px),
        field!("map.sigma_w", |c| c.planner.map.weights.sigma_w),
        field!("map.sigma_d", |c| c.planner.map.weights.sigma_d),
        field!("map.sigma_c", |c| c.planner.map.weights.sigma_c),
        field!("map.center_dilation_px", |c| c.planner.map.center_dilation_px),
        field!("grasp.open_width_px", |c| c.planner.grasp.hand.open_width_px),
        field!("grasp.finger_w_px", |c| c.planner.grasp.hand.finger_w_px),
        field!("grasp.finger_h_px", |c| c.planner.grasp.hand.finger_h_px),
        field!("grasp.rotations", |c| c.planner.grasp.rotations),
        field!("grasp.grasp_depth_mm", |c| c.planner.grasp.grasp_depth_mm),
        field!("grasp.floor_clearance_mm", |c| c.planner.grasp.floor_clearance_mm),
        field!("grasp.min_contact_px", |c| c.planner.grasp.min_contact_px),
        field!("grasp.top_k", |c| c.planner.grasp.top_k),
        field!("planner.writhe_gate", |c| c.planner.writhe_gate),
        field!("planner.region_window_px", |c| c.planner.region_window_px),
        field!("planner.regions_k", |c| c.planner.regions_k),
        field!("planner.top_k_per_region", |c| c.planner.top_k_per_region),
        field!("planner.rank_alpha", |c| c.planner.rank_alpha),
        field!("planner.ranker", |c| c.planner.ranker),
        field!("scene.width", |c| c.scene.width),
        field!("scene.height", |c| c.scene.height),
        field!("scene.focal_px", |c| c.scene.focal_px),
        field!("scene.floor_mm", |c| c.scene.floor_mm),
        field!("scene.placement", |c| c.scene.placement),
        field!("scene.pattern", |c| c.scene.pattern),
        field!("scene.part_count", |c| c.scene.part_count),
        field!("scene.margin_px", |c| c.scene.margin_px),
        field!("scene.separation_mm", |c| c.scene.separation_mm),
        field!("scene.max_attempts", |c| c.scene.max_attempts),
        field!("scene.noise_sigma_mm", |c| c.scene.noise.sigma_mm),
        field!("scene.quantize_mm", |c| c.scene.noise.quantize_mm),
        field!("scene.invalid_border_px", |c| c.scene.noise.invalid_border_px),
        field!("scene.c_radius_mm", |c| c.scene.c_params.radius_mm),
        field!("scene.c_arc_deg", |c| c.scene.c_params.arc_deg),
        field!("scene.c_wire_radius_mm", |c| c.scene.c_params.wire_radius_mm),
        field!("scene.c_spacing_mm", |c| c.scene.c_params.spacing_mm),
        field!("scene.c_radius_jitter", |c| c.scene.c_params.radius_jitter),
        field!("scene.s_radius_mm", |c| c.scene.s_params.radius_mm),
        field!("scene.s_arc_deg", |c| c.scene.s_params.arc_deg),
        field!("scene.s_second_radius_mm", |c| c.scene.s_params.second_radius_mm),
        field!("scene.s_second_arc_deg", |c| c.scene.s_params.second_arc_deg),
        field!("scene.s_wire_radius_mm", |c| c.scene.s_params.wire_radius_mm),
        field!("scene.s_spacing_mm", |c| c.scene.s_params.spacing_mm),
        field!("scene.s_radius_jitter", |c| c.scene.s_params.radius_jitter),
    ]
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let table = fields();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| CliError::Config(format!("line {}: {msg}", no + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let field = table
                .iter()
                .find(|f| f.key == key)
                .ok_or_else(|| bad(format!("unknown key '{key}'")))?;
            (field.set)(&mut cfg, value).map_err(|e| bad(format!("{key}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
            None => Ok(Self::default()),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let table = fields();
        let field = table
            .iter()
            .find(|f| f.key == key)
            .ok_or_else(|| CliError::Config(format!("unknown key '{key}'")))?;
        (field.set)(self, value).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    /// Every key with its current value, one `key = value` line each.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in fields() {
            let _ = writeln!(out, "{} = {}", f.key, (f.get)(self));
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.camera.focal_px > 0.0) {
            return bad(format!("camera.focal_px must be positive, got {}", self.camera.focal_px));
        }
        if !(self.camera.max_range_mm > 0.0) {
            return bad("camera.max_range_mm must be positive".into());
        }
        self.planner
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !rankers().contains(&self.planner.ranker) {
            let names: Vec<_> = rankers().names().collect();
            return bad(format!("planner.ranker '{}' is not one of {names:?}", self.planner.ranker));
        }
        if !kernel_registry().contains(&self.planner.map.gli.kernel) {
            let names: Vec<_> = kernel_registry().names().collect();
            return bad(format!("gli.kernel '{}' is not one of {names:?}", self.planner.map.gli.kernel));
        }
        if !placement_registry().contains(&self.scene.placement) {
            let names: Vec<_> = placement_registry().names().collect();
            return bad(format!("scene.placement '{}' is not one of {names:?}", self.scene.placement));
        }
        if self.scene.width == 0 || self.scene.height == 0 {
            return bad("scene.width and scene.height must be positive".into());
        }
        Ok(())
    }
}
