use nalgebra::Vector2;
use proptest::prelude::*;

use tanglemap_core::depth::{backproject, DepthImage, Intrinsics};
use tanglemap_core::edge::*;
use tanglemap_core::grid::{raster_line, Grid, Mask};
use tanglemap_core::scenegen::{generate, Pattern, Rendered, SceneConfig};

fn single(pattern: Pattern, seed: u64) -> Rendered {
    let cfg = SceneConfig {
        placement: "separated".into(),
        part_count: 1,
        pattern,
        ..SceneConfig::default()
    };
    generate(&cfg, seed).unwrap().1
}

fn point_to_segment(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let d = b - a;
    let t = if d.norm_squared() > 0.0 { ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + d * t)).norm()
}

fn distance_to_outline(p: Vector2<f64>, outline: &[Vec<Vector2<f64>>]) -> f64 {
    outline
        .iter()
        .flat_map(|line| line.windows(2).map(move |w| point_to_segment(p, w[0], w[1])))
        .fold(f64::INFINITY, f64::min)
}

/// Samples every outline polyline at unit arc-length steps.
fn samples(outline: &[Vec<Vector2<f64>>]) -> Vec<Vector2<f64>> {
    let mut out = Vec::new();
    for line in outline {
        for w in line.windows(2) {
            let n = (w[1] - w[0]).norm().ceil().max(1.0) as usize;
            out.extend((0..n).map(|k| w[0] + (w[1] - w[0]) * (k as f64 / n as f64)));
        }
    }
    out
}

fn near_edge(edges: &Mask, p: Vector2<f64>, r: f64) -> bool {
    let ri = r.ceil() as i64;
    let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
    (-ri..=ri).any(|dy| {
        (-ri..=ri).any(|dx| {
            let (x, y) = (cx + dx, cy + dy);
            edges.contains(x, y)
                && edges[(x as usize, y as usize)]
                && (Vector2::new(x as f64, y as f64) - p).norm() <= r
        })
    })
}

#[test]
fn c_part_edges_follow_the_silhouette() {
    for seed in 0..5 {
        let r = single(Pattern::COnly, seed);
        let edges = detect_edges(&r.depth, EdgeConfig::default().grad_threshold).unwrap();
        let pts = samples(&r.silhouettes[0]);
        let covered = pts.iter().filter(|&&p| near_edge(&edges, p, 2.0)).count();
        let frac = covered as f64 / pts.len() as f64;
        assert!(frac >= 0.95, "seed {seed}: {frac:.3} of the silhouette has an edge within 2 px");
    }
}

fn rasterize(outline: &[Vec<Vector2<f64>>], dims: (usize, usize)) -> Mask {
    let mut m = Mask::new(dims.0, dims.1, false);
    for line in outline {
        for w in line.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (x, y) in raster_line(a.x.round() as i64, a.y.round() as i64, b.x.round() as i64, b.y.round() as i64) {
                if m.contains(x, y) {
                    m[(x as usize, y as usize)] = true;
                }
            }
        }
    }
    m
}

#[test]
fn s_part_outline_fit_stays_on_the_outline() {
    for seed in 0..20 {
        let r = single(Pattern::SOnly, seed);
        let cfg = EdgeConfig::default();
        let outline = &r.silhouettes[0];
        let segs = fit_pixel_segments(&rasterize(outline, r.depth.dims()), &cfg);
        assert!(segs.len() >= 8, "seed {seed}");
        let mut worst: f64 = 0.0;
        for ((ax, ay), (bx, by)) in segs {
            let (a, b) = (Vector2::new(ax as f64, ay as f64), Vector2::new(bx as f64, by as f64));
            for k in 0..=20 {
                let p = a + (b - a) * (k as f64 / 20.0);
                worst = worst.max(distance_to_outline(p, outline));
            }
        }
        // Chain pixels sit up to half a pixel diagonal off the sub-pixel outline.
        let bound = cfg.fit_tol_px + std::f64::consts::FRAC_1_SQRT_2;
        assert!(worst <= bound, "seed {seed}: {worst:.2} px off the outline");
    }
}

#[test]
fn straight_chain_is_one_segment() {
    let mut edges = Mask::new(120, 20, false);
    for x in 10..110 {
        edges[(x, 10)] = true;
    }
    let cfg = EdgeConfig { max_seg_len_px: None, ..EdgeConfig::default() };
    let segs = fit_pixel_segments(&edges, &cfg);
    assert_eq!(segs.len(), 1);
    let (a, b) = segs[0];
    let mut xs = [a.0, b.0];
    xs.sort();
    assert_eq!(xs, [10, 109]);
}

#[test]
fn empty_edges_give_no_segments() {
    let img = DepthImage::new(Grid::new(30, 30, 1000.0), Intrinsics::centered(30, 30, 500.0));
    let set = fit_segments(&Mask::new(30, 30, false), &img, &EdgeConfig::default());
    assert!(set.is_empty());
}

#[test]
fn backprojection_round_trip() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let k = Intrinsics { fx: 912.0, fy: 905.5, cx: 318.2, cy: 241.7 };
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let px = Vector2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
        let p = backproject(px, rng.random_range(300.0..2000.0), &k).unwrap();
        worst = worst.max((k.project(&p) - px).norm());
    }
    assert!(worst < 1e-6, "{worst}");
}

/// A small rendered scene with rectangular blobs of invalid pixels.
fn small_scene(seed: u64, holes: &[(usize, usize, usize)]) -> DepthImage {
    let cfg = SceneConfig {
        width: 200,
        height: 200,
        placement: "random_pile".into(),
        part_count: 2,
        ..SceneConfig::default()
    };
    let mut img = generate(&cfg, seed).unwrap().1.depth;
    for &(x0, y0, s) in holes {
        for y in y0..(y0 + s).min(200) {
            for x in x0..(x0 + s).min(200) {
                img.invalidate(x, y);
            }
        }
    }
    img
}

fn holes() -> impl Strategy<Value = Vec<(usize, usize, usize)>> {
    prop::collection::vec((0..200usize, 0..200usize, 2..25usize), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extraction_is_deterministic(seed in 0..1000u64, h in holes()) {
        let img = small_scene(seed, &h);
        let cfg = EdgeConfig::default();
        prop_assert_eq!(extract(&img, &cfg).unwrap(), extract(&img, &cfg).unwrap());
    }

    #[test]
    fn endpoint_depths_come_from_valid_pixels(seed in 0..1000u64, h in holes()) {
        let img = small_scene(seed, &h);
        let set = extract(&img, &EdgeConfig::default()).unwrap();
        for s in &set.segments {
            for (p, z) in [(s.pixel_p0(), s.p0().z), (s.pixel_p1(), s.p1().z)] {
                let (x, y) = (p.x.round() as i64, p.y.round() as i64);
                let sourced = (-1..=1).any(|dy| (-1..=1).any(|dx| {
                    let (u, v) = (x + dx, y + dy);
                    (0..200).contains(&u) && (0..200).contains(&v) && img.depth(u as usize, v as usize) == Some(z)
                }));
                prop_assert!(sourced, "endpoint ({}, {}) depth {} has no valid source", x, y, z);
            }
        }
    }

    #[test]
    fn count_shrinks_with_min_len(seed in 0..1000u64, a in 2.0..30.0f64, b in 2.0..30.0f64) {
        let img = small_scene(seed, &[]);
        let (lo, hi) = (a.min(b), a.max(b));
        let n = |m: f64| extract(&img, &EdgeConfig { min_len_px: m, ..EdgeConfig::default() }).unwrap().len();
        prop_assert!(n(hi) <= n(lo));
    }

    #[test]
    fn segments_reproject_onto_their_footprint(seed in 0..1000u64) {
        let img = small_scene(seed, &[]);
        let cfg = EdgeConfig::default();
        let set = extract(&img, &cfg).unwrap();
        let k = img.intrinsics();
        for s in &set.segments {
            prop_assert!((k.project(&s.p0()) - s.pixel_p0()).norm() <= cfg.fit_tol_px);
            prop_assert!((k.project(&s.p1()) - s.pixel_p1()).norm() <= cfg.fit_tol_px);
        }
    }
}
