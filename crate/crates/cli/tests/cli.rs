use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use tempfile::TempDir;

use tanglemap::commands::{timing_path, CoordinateFile, EvalReport, GraspsFile, TruthFile};
use tanglemap::config::RunConfig;
use tanglemap::error::CliError;
use tanglemap::io::{read_json, write_depth_png};
use tanglemap_core::depth::{DepthImage, Intrinsics};
use tanglemap_core::grid::Grid;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tanglemap")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(dir: &Path, count: usize) -> PathBuf {
    let c = dir.join("corpus");
    let out = run(&["gen", "--out", s(&c), "--count", &count.to_string(), "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    c
}

fn flat_png(dir: &Path) -> PathBuf {
    let p = dir.join("flat.png");
    let img = DepthImage::new(Grid::new(64, 64, 1000.0), Intrinsics::centered(64, 64, 500.0));
    write_depth_png(&p, &img).unwrap();
    p
}

#[test]
fn defaults_parse_back() {
    let out = run(&["defaults"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("planner.rank_alpha = 0.7"));
    assert_eq!(RunConfig::parse(&text).unwrap(), RunConfig::default());
}

#[test]
fn gen_plan_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), 2);
    let truth: TruthFile = read_json(&c.join("scene_0000.truth.json")).unwrap();
    assert_eq!(truth.depth_png, "scene_0000.png");
    assert_eq!(truth.crossings_px.len(), truth.scene.crossings.len());

    let out = dir.path().join("plan");
    let p = run(&["plan", s(&c.join("scene_0000.png")), "--out", s(&out)]);
    assert_eq!(code(&p), 0, "{}", String::from_utf8_lossy(&p.stderr));
    for f in ["grasps.json", "coordinate.json", "map.png", "overlay.png", "writhe_matrix.png", "plan.timing.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let grasps: GraspsFile = read_json(&out.join("grasps.json")).unwrap();
    assert!(!grasps.grasps.is_empty());
    assert!(grasps.grasps.windows(2).all(|w| w[0].score >= w[1].score));
    let coord: CoordinateFile = read_json(&out.join("coordinate.json")).unwrap();
    assert_eq!(coord.path, grasps.path);
    // Parsed artifacts serialize back to the same text.
    let text = std::fs::read_to_string(out.join("grasps.json")).unwrap();
    assert_eq!(serde_json::to_string_pretty(&grasps).unwrap() + "\n", text);

    let report = dir.path().join("reports/eval.json");
    let e = run(&["eval", s(&c), "--out", s(&report)]);
    assert_eq!(code(&e), 0, "{}", String::from_utf8_lossy(&e.stderr));
    let r: EvalReport = read_json(&report).unwrap();
    assert_eq!(r.overall.scenes, 2);
    assert_eq!(r.results.len(), 2);
    assert!(timing_path(&report).exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let files = |d: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| !p.to_string_lossy().ends_with(".timing.json"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let mut runs = Vec::new();
    for k in 0..2 {
        let base = dir.path().join(format!("run{k}"));
        let c = base.join("corpus");
        assert_eq!(code(&run(&["gen", "--out", s(&c), "--count", "2", "--seed", "9"])), 0);
        let p = base.join("plan");
        assert_eq!(code(&run(&["plan", s(&c.join("scene_0001.png")), "--out", s(&p)])), 0);
        let r = base.join("report");
        std::fs::create_dir_all(&r).unwrap();
        assert_eq!(code(&run(&["eval", s(&c), "--out", s(&r.join("eval.json"))])), 0);
        runs.push([files(&c), files(&p), files(&r)]);
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn missing_and_malformed_inputs_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let p = run(&["plan", s(&dir.path().join("nope.png")), "--out", s(&out)]);
    assert_eq!(code(&p), 2);
    assert!(String::from_utf8_lossy(&p.stderr).contains("nope.png"));

    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not a png at all").unwrap();
    assert_eq!(code(&run(&["plan", s(&junk), "--out", s(&out)])), 2);

    let rgb = dir.path().join("rgb.png");
    image::RgbImage::new(8, 8).save(&rgb).unwrap();
    assert_eq!(code(&run(&["plan", s(&rgb), "--out", s(&out)])), 2);
}

#[test]
fn bad_configs_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let png = flat_png(dir.path());
    let cfg = dir.path().join("bad.cfg");
    for text in ["planner.rank_alpha = 1.5", "planner.nonsense = 3", "just words", "planner.ranker = oracle"] {
        std::fs::write(&cfg, text).unwrap();
        let p = run(&["plan", s(&png), "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
        assert_eq!(code(&p), 2, "{text}");
        assert!(String::from_utf8_lossy(&p.stderr).contains("config error"), "{text}");
    }
    assert_eq!(code(&run(&["plan", s(&png), "--alpha", "-0.5"])), 2);
}

#[test]
fn flat_bin_exits_with_3_and_still_reports() {
    let dir = TempDir::new().unwrap();
    let png = flat_png(dir.path());
    let out = dir.path().join("o");
    let p = run(&["plan", s(&png), "--out", s(&out)]);
    assert_eq!(code(&p), 3);
    let coord: CoordinateFile = read_json(&out.join("coordinate.json")).unwrap();
    assert_eq!(coord.writhe, 0.0);
    assert!(out.join("plan.timing.json").exists());
    assert!(!out.join("grasps.json").exists());
}

#[test]
fn corpora_without_truth_exit_with_4() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&run(&["eval", s(&empty), "--out", s(&dir.path().join("r.json"))])), 4);

    let orphan = dir.path().join("orphan");
    let c = corpus(dir.path(), 1);
    std::fs::create_dir_all(&orphan).unwrap();
    for f in ["scene_0000.png", "scene_0000.labels.png", "scene_0000.truth.json"] {
        std::fs::copy(c.join(f), orphan.join(f)).unwrap();
    }
    std::fs::copy(c.join("scene_0000.png"), orphan.join("scene_0001.png")).unwrap();
    assert_eq!(code(&run(&["eval", s(&orphan), "--out", s(&dir.path().join("r.json"))])), 4);
}

#[test]
fn error_kinds_map_to_exit_codes() {
    assert_eq!(CliError::Config("x".into()).exit_code(), 2);
    assert_eq!(CliError::Input("x".into()).exit_code(), 2);
    assert_eq!(CliError::NoGraspFound("x".into()).exit_code(), 3);
    assert_eq!(CliError::MissingTruth("x".into()).exit_code(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_parsing_never_panics(text in "[ -~\n]{0,120}") {
        let _ = RunConfig::parse(&text);
    }

    #[test]
    fn config_values_never_panic(key in prop::sample::select(RunConfig::default().render().lines().map(|l| l.split(" = ").next().unwrap().to_string()).collect::<Vec<_>>()), value in "[ -~]{0,16}") {
        if let Ok(cfg) = RunConfig::parse(&format!("{key} = {value}")) {
            prop_assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg);
        }
    }
}
