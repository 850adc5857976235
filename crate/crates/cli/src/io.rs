//! Depth PNG, label PNG, JSON and visualization files.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb, RgbImage};
use serde::de::DeserializeOwned;
use serde::Serialize;

use tanglemap_core::depth::{DepthImage, Intrinsics};
use tanglemap_core::gli::WritheMatrix;
use tanglemap_core::grasp::{build_templates, GraspCandidate, HandGeometry};
use tanglemap_core::grid::Grid;
use tanglemap_core::map::EntanglementMap;

use crate::error::CliError;

/// Reads a single-channel 16-bit PNG of millimeter depths; 0 marks invalid.
pub fn read_depth_png(path: &Path, intrinsics: impl Fn(usize, usize) -> Intrinsics, max_range_mm: f64) -> Result<DepthImage, CliError> {
    let img = image::open(path).map_err(|e| CliError::io(path, e))?;
    let gray = match img {
        DynamicImage::ImageLuma16(g) => g,
        other => {
            return Err(CliError::Input(format!(
                "{}: expected a 16-bit grayscale PNG, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let depth = Grid::from_vec(w, h, gray.into_raw().into_iter().map(f64::from).collect());
    Ok(DepthImage::with_max_range(depth, intrinsics(w, h), max_range_mm))
}

pub fn write_depth_png(path: &Path, img: &DepthImage) -> Result<(), CliError> {
    let (w, h) = img.dims();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, img.to_mm_u16()).expect("buffer matches dimensions");
    buf.save(path).map_err(|e| CliError::io(path, e))
}

pub fn write_labels_png(path: &Path, labels: &Grid<u16>) -> Result<(), CliError> {
    let (w, h) = labels.dims();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, labels.data().to_vec()).expect("buffer matches dimensions");
    buf.save(path).map_err(|e| CliError::io(path, e))
}

pub fn read_labels_png(path: &Path) -> Result<Grid<u16>, CliError> {
    let img = image::open(path).map_err(|e| CliError::io(path, e))?;
    let g = img.into_luma16();
    let (w, h) = (g.width() as usize, g.height() as usize);
    Ok(Grid::from_vec(w, h, g.into_raw()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

/// Heatmap color stops, evenly spaced from 0 (low) to 1 (high).
const STOPS: [[u8; 3]; 5] = [
    [20, 30, 140],
    [30, 110, 230],
    [40, 180, 160],
    [170, 220, 60],
    [253, 231, 37],
];

/// 256-entry lookup table interpolated linearly between [`STOPS`].
pub fn colormap() -> [[u8; 3]; 256] {
    let mut lut = [[0u8; 3]; 256];
    let segments = (STOPS.len() - 1) as f64;
    for (i, entry) in lut.iter_mut().enumerate() {
        let t = i as f64 / 255.0 * segments;
        let k = (t.floor() as usize).min(STOPS.len() - 2);
        let f = t - k as f64;
        for c in 0..3 {
            let (a, b) = (STOPS[k][c] as f64, STOPS[k + 1][c] as f64);
            entry[c] = (a + (b - a) * f).round() as u8;
        }
    }
    lut
}

fn level(v: f64) -> usize {
    (v.clamp(0.0, 1.0) * 255.0).round() as usize
}

pub fn map_image(map: &EntanglementMap) -> RgbImage {
    let lut = colormap();
    let (w, h) = map.dims();
    RgbImage::from_fn(w as u32, h as u32, |x, y| Rgb(lut[level(map.get(x as usize, y as usize))]))
}

/// Depth as gray (near is bright, invalid is black) with grasps drawn on
/// top: finger footprints and the closing line, best grasp in red.
pub fn overlay_image(depth: &DepthImage, grasps: &[GraspCandidate], hand: HandGeometry, rotations: usize, max_drawn: usize) -> RgbImage {
    let (w, h) = depth.dims();
    let (lo, hi) = (depth.min_depth().unwrap_or(0.0), depth.max_depth().unwrap_or(1.0));
    let span = (hi - lo).max(1e-9);
    let mut img = RgbImage::from_fn(w as u32, h as u32, |x, y| match depth.depth(x as usize, y as usize) {
        Some(d) => {
            let g = (255.0 * (1.0 - (d - lo) / span)).round() as u8;
            Rgb([g, g, g])
        }
        None => Rgb([0, 0, 0]),
    });
    let templates = build_templates(hand, rotations.max(1)).unwrap_or_default();
    let put = |img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            img.put_pixel(x as u32, y as u32, c);
        }
    };
    for (rank, g) in grasps.iter().take(max_drawn).enumerate().rev() {
        let color = if rank == 0 { Rgb([230, 30, 30]) } else { Rgb([240, 160, 20]) };
        if let Some(t) = templates.get(g.rotation_index) {
            for &(dx, dy) in &t.collision.offsets {
                put(&mut img, g.x as i64 + dx as i64, g.y as i64 + dy as i64, color);
            }
            let (ax, ay) = t.closing_axis();
            let half = hand.open_width_px / 2.0;
            let steps = (2.0 * half).ceil() as i64;
            for s in 0..=steps {
                let u = -half + s as f64;
                put(&mut img, (g.x as f64 + u * ax).round() as i64, (g.y as f64 + u * ay).round() as i64, color);
            }
        }
    }
    img
}

/// The writhe matrix as gray levels relative to its largest entry, each
/// entry drawn as a square block so small matrices stay visible.
pub fn writhe_matrix_image(t: Option<&WritheMatrix>) -> RgbImage {
    let Some(t) = t.filter(|t| t.n() > 0) else {
        return RgbImage::new(1, 1);
    };
    let n = t.n();
    let scale = (512 / n).max(1);
    let max = t.max_value();
    let side = (n * scale) as u32;
    RgbImage::from_fn(side, side, |x, y| {
        let (i, j) = (y as usize / scale, x as usize / scale);
        let v = if max > 0.0 { t.get(i, j) / max } else { 0.0 };
        let g = level(v) as u8;
        Rgb([g, g, g])
    })
}

pub fn save_rgb(path: &Path, img: &RgbImage) -> Result<(), CliError> {
    img.save(path).map_err(|e| CliError::io(path, e))
}
