//! Collision-aware parallel-jaw grasp detection by template correlation on a
//! height-sliced depth image.

mod template;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::DepthImage;
use crate::grid::{Grid, Mask};
use crate::map::Rect;

pub use template::{build_templates, unit_direction, HandGeometry, HandTemplate, Stamp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraspError {
    #[error("invalid hand geometry: {0}")]
    InvalidGeometry(String),
    #[error("region {region:?} is not inside the {dims:?} image")]
    RegionOutOfBounds { region: Rect, dims: (usize, usize) },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspConfig {
    pub hand: HandGeometry,
    pub rotations: usize,
    /// How far below the highest point the fingers reach.
    pub grasp_depth_mm: f64,
    /// The slicing plane stays at least this far above the estimated floor.
    pub floor_clearance_mm: f64,
    /// Object pixels needed between the fingers for a pose to count.
    pub min_contact_px: u32,
    /// Candidates kept per detection call.
    pub top_k: usize,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            hand: HandGeometry::default(),
            rotations: 4,
            grasp_depth_mm: 25.0,
            floor_clearance_mm: 6.0,
            min_contact_px: 20,
            top_k: 10,
        }
    }
}

impl GraspConfig {
    pub fn templates(&self) -> Result<Vec<HandTemplate>, GraspError> {
        build_templates(self.hand, self.rotations)
    }

    /// Suppression radius between candidates.
    pub fn nms_radius_px(&self) -> f64 {
        self.hand.finger_w_px
    }

    pub fn smoothing_sigma_px(&self) -> f64 {
        self.hand.finger_w_px / 2.0
    }
}

/// A top-down grasp pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub x: usize,
    pub y: usize,
    pub rotation_index: usize,
    /// Direction the fingers close along, measured from the image x axis.
    pub angle_deg: f64,
    /// Nearest object depth between the fingers.
    pub depth_mm: f64,
    pub graspability: f64,
    pub entanglement: f64,
    pub score: f64,
    /// Slicing plane the pose was checked against.
    pub plane_mm: f64,
}

/// Depth of the slicing plane: `grasp_depth_mm` below the nearest valid
/// sample, but never within `floor_clearance_mm` of the floor, estimated as
/// the 99th percentile of valid depth. `None` without valid pixels.
pub fn slice_plane(img: &DepthImage, grasp_depth_mm: f64, floor_clearance_mm: f64) -> Option<f64> {
    let mut depths: Vec<f64> = img
        .raw()
        .data()
        .iter()
        .zip(img.valid().data())
        .filter(|(_, &v)| v)
        .map(|(&d, _)| d)
        .collect();
    if depths.is_empty() {
        return None;
    }
    let k = ((depths.len() - 1) as f64 * 0.99).round() as usize;
    let (_, floor, _) = depths.select_nth_unstable_by(k, f64::total_cmp);
    let floor = *floor;
    let nearest = depths.iter().copied().fold(f64::INFINITY, f64::min);
    Some((nearest + grasp_depth_mm).min(floor - floor_clearance_mm))
}

/// Row-wise prefix sums of a mask, `width + 1` entries per row.
struct RowPrefix {
    width: usize,
    height: usize,
    sums: Vec<u32>,
}

impl RowPrefix {
    fn new(mask: &Mask) -> Self {
        let (w, h) = mask.dims();
        let mut sums = vec![0u32; (w + 1) * h];
        for y in 0..h {
            let row = &mut sums[y * (w + 1)..(y + 1) * (w + 1)];
            for (x, &m) in mask.row(y).iter().enumerate() {
                row[x + 1] = row[x] + m as u32;
            }
        }
        Self {
            width: w,
            height: h,
            sums,
        }
    }

    /// Set pixels under `stamp` centered at `(x, y)`, and how many of the
    /// stamp's pixels fall inside the image.
    fn count(&self, stamp: &Stamp, x: usize, y: usize) -> (u32, u32) {
        let (w, h) = (self.width as i64, self.height as i64);
        let (mut set, mut inside) = (0, 0);
        for &(dy, x0, x1) in &stamp.runs {
            let yy = y as i64 + dy as i64;
            if yy < 0 || yy >= h {
                continue;
            }
            let a = (x as i64 + x0 as i64).clamp(0, w) as usize;
            let b = (x as i64 + x1 as i64 + 1).clamp(0, w) as usize;
            let row = yy as usize * (self.width + 1);
            set += self.sums[row + b] - self.sums[row + a];
            inside += (b - a) as u32;
        }
        (set, inside)
    }
}

/// The depth image cut at a plane: what the fingers would touch.
pub struct SlicedScene {
    pub plane_mm: f64,
    /// Valid pixels nearer than the plane.
    pub object: Mask,
    /// Object pixels plus invalid ones; fingers must not land on either.
    pub blocked: Mask,
    object_sums: RowPrefix,
    blocked_sums: RowPrefix,
}

impl SlicedScene {
    pub fn new(img: &DepthImage, plane_mm: f64) -> Self {
        let raw = img.raw();
        let valid = img.valid();
        let (w, h) = img.dims();
        let object = Grid::from_fn(w, h, |x, y| valid[(x, y)] && raw[(x, y)] < plane_mm);
        let blocked = Grid::from_fn(w, h, |x, y| !valid[(x, y)] || object[(x, y)]);
        Self {
            plane_mm,
            object_sums: RowPrefix::new(&object),
            blocked_sums: RowPrefix::new(&blocked),
            object,
            blocked,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.object.dims()
    }

    /// Object pixels between the fingers.
    pub fn contact_count(&self, tmpl: &HandTemplate, x: usize, y: usize) -> u32 {
        self.object_sums.count(&tmpl.contact, x, y).0
    }

    /// Finger pixels that are blocked or fall outside the image, which is unobserved.
    pub fn collision_count(&self, tmpl: &HandTemplate, x: usize, y: usize) -> u32 {
        let (set, inside) = self.blocked_sums.count(&tmpl.collision, x, y);
        set + (tmpl.collision.len() as u32 - inside)
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with zero outside the grid.
pub fn gaussian_blur(g: &Grid<f64>, sigma: f64) -> Grid<f64> {
    if !(sigma > 0.0) {
        return g.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = g.dims();
    let pass = |src: &Grid<f64>, horizontal: bool| {
        let rows: Vec<Vec<f64>> = (0..h)
            .into_par_iter()
            .map(|y| {
                (0..w)
                    .map(|x| {
                        let mut acc = 0.0;
                        for (i, kv) in k.iter().enumerate() {
                            let o = i as i64 - r;
                            let (xx, yy) = if horizontal {
                                (x as i64 + o, y as i64)
                            } else {
                                (x as i64, y as i64 + o)
                            };
                            if src.contains(xx, yy) {
                                acc += kv * src[(xx as usize, yy as usize)];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Grid::from_vec(w, h, rows.concat())
    };
    pass(&pass(g, true), false)
}

/// Graspability of one hand orientation over the whole image: the smoothed
/// fraction of the contact region filled by object, kept only where the
/// fingers are free of object and invalid pixels.
pub fn graspability_map(scene: &SlicedScene, tmpl: &HandTemplate, cfg: &GraspConfig) -> Grid<f64> {
    let (w, h) = scene.dims();
    graspability_map_in(scene, tmpl, cfg, &Rect::new(0, 0, w, h))
}

/// Same values as [`graspability_map`] inside `roi`, zero elsewhere. Contact
/// counts are only taken over the smoothing footprint of `roi`.
pub fn graspability_map_in(scene: &SlicedScene, tmpl: &HandTemplate, cfg: &GraspConfig, roi: &Rect) -> Grid<f64> {
    let (w, h) = scene.dims();
    let mut out = Grid::new(w, h, 0.0);
    let (rx0, ry0) = (roi.x.min(w), roi.y.min(h));
    let (rx1, ry1) = ((roi.x + roi.w).min(w), (roi.y + roi.h).min(h));
    if rx0 >= rx1 || ry0 >= ry1 {
        return out;
    }
    let sigma = cfg.smoothing_sigma_px();
    let k = if sigma > 0.0 { gaussian_kernel(sigma) } else { vec![1.0] };
    let r = k.len() / 2;
    let (ex0, ey0) = (rx0.saturating_sub(r), ry0.saturating_sub(r));
    let (ex1, ey1) = ((rx1 + r).min(w), (ry1 + r).min(h));
    let ew = ex1 - ex0;
    let rw = rx1 - rx0;
    let area = tmpl.contact.len() as f64;
    let contact: Vec<u32> = (ey0..ey1)
        .into_par_iter()
        .flat_map_iter(|y| (ex0..ex1).map(move |x| scene.contact_count(tmpl, x, y)))
        .collect();
    let frac: Vec<f64> = contact.iter().map(|&c| c as f64 / area).collect();
    let horiz: Vec<f64> = (0..ey1 - ey0)
        .into_par_iter()
        .flat_map_iter(|ey| {
            let (frac, k) = (&frac, &k);
            let row = &frac[ey * ew..(ey + 1) * ew];
            (rx0..rx1).map(move |x| {
                let mut acc = 0.0;
                for (i, kv) in k.iter().enumerate() {
                    let xx = x as i64 + i as i64 - r as i64;
                    if xx >= ex0 as i64 && xx < ex1 as i64 {
                        acc += kv * row[xx as usize - ex0];
                    }
                }
                acc
            })
        })
        .collect();
    let min_contact = cfg.min_contact_px.max(1);
    let rows: Vec<Vec<f64>> = (ry0..ry1)
        .into_par_iter()
        .map(|y| {
            (rx0..rx1)
                .map(|x| {
                    if contact[(y - ey0) * ew + x - ex0] < min_contact || scene.collision_count(tmpl, x, y) != 0 {
                        return 0.0;
                    }
                    let mut acc = 0.0;
                    for (i, kv) in k.iter().enumerate() {
                        let yy = y as i64 + i as i64 - r as i64;
                        if yy >= ey0 as i64 && yy < ey1 as i64 {
                            acc += kv * horiz[(yy as usize - ey0) * rw + x - rx0];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    for (y, row) in (ry0..ry1).zip(rows) {
        out.data_mut()[y * w + rx0..y * w + rx1].copy_from_slice(&row);
    }
    out
}

/// One map per template.
pub fn graspability_maps(scene: &SlicedScene, templates: &[HandTemplate], cfg: &GraspConfig) -> Vec<Grid<f64>> {
    templates.iter().map(|t| graspability_map(scene, t, cfg)).collect()
}

/// A local maximum of a graspability map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: usize,
    pub y: usize,
    pub rotation_index: usize,
    pub value: f64,
}

fn is_local_max(g: &Grid<f64>, x: usize, y: usize) -> bool {
    let v = g[(x, y)];
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if (dx, dy) == (0, 0) {
                continue;
            }
            let (xx, yy) = (x as i64 + dx, y as i64 + dy);
            if g.contains(xx, yy) && g[(xx as usize, yy as usize)] > v {
                return false;
            }
        }
    }
    true
}

/// Positive local maxima of all maps inside `region`, greedily suppressed so
/// no two survivors are closer than `radius_px`, strongest first, at most `top_k`.
pub fn extract_candidates(gmaps: &[Grid<f64>], region: &Rect, top_k: usize, radius_px: f64) -> Vec<Peak> {
    let mut peaks = Vec::new();
    for (r, g) in gmaps.iter().enumerate() {
        for y in region.y..region.y + region.h {
            for x in region.x..region.x + region.w {
                let value = g[(x, y)];
                if value > 0.0 && is_local_max(g, x, y) {
                    peaks.push(Peak {
                        x,
                        y,
                        rotation_index: r,
                        value,
                    });
                }
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
            .then(a.rotation_index.cmp(&b.rotation_index))
    });
    let r2 = radius_px * radius_px;
    let mut kept: Vec<Peak> = Vec::new();
    for p in peaks {
        if kept.len() >= top_k {
            break;
        }
        let close = kept.iter().any(|k| {
            let (dx, dy) = (k.x as f64 - p.x as f64, k.y as f64 - p.y as f64);
            dx * dx + dy * dy < r2
        });
        if !close {
            kept.push(p);
        }
    }
    kept
}

/// Direct stamp test: whether any collision pixel of the hand at `(x, y)` is
/// outside the image, invalid, or nearer than `plane_mm`.
pub fn collides_at(img: &DepthImage, tmpl: &HandTemplate, x: usize, y: usize, plane_mm: f64) -> bool {
    tmpl.collision.offsets.iter().any(|&(dx, dy)| {
        let (xx, yy) = (x as i64 + dx as i64, y as i64 + dy as i64);
        if xx < 0 || yy < 0 || xx >= img.width() as i64 || yy >= img.height() as i64 {
            return true;
        }
        match img.depth(xx as usize, yy as usize) {
            Some(d) => d < plane_mm,
            None => true,
        }
    })
}

/// Labels found under the contact stamp of a pose, ascending, with 0 left out.
pub fn labels_under_contact(labels: &Grid<u16>, tmpl: &HandTemplate, x: usize, y: usize) -> Vec<u16> {
    let mut found: Vec<u16> = tmpl
        .contact
        .offsets
        .iter()
        .filter_map(|&(dx, dy)| {
            let (xx, yy) = (x as i64 + dx as i64, y as i64 + dy as i64);
            labels.contains(xx, yy).then(|| labels[(xx as usize, yy as usize)])
        })
        .filter(|&l| l > 0)
        .collect();
    found.sort_unstable();
    found.dedup();
    found
}

/// Nearest object depth under the contact stamp.
fn contact_depth(img: &DepthImage, tmpl: &HandTemplate, x: usize, y: usize, plane_mm: f64) -> Option<f64> {
    tmpl.contact
        .offsets
        .iter()
        .filter_map(|&(dx, dy)| {
            let (xx, yy) = (x as i64 + dx as i64, y as i64 + dy as i64);
            if xx < 0 || yy < 0 || xx >= img.width() as i64 || yy >= img.height() as i64 {
                return None;
            }
            img.depth(xx as usize, yy as usize).filter(|&d| d < plane_mm)
        })
        .reduce(f64::min)
}

fn to_candidates(img: &DepthImage, templates: &[HandTemplate], peaks: &[Peak], plane_mm: f64) -> Vec<GraspCandidate> {
    peaks
        .iter()
        .map(|p| {
            let t = &templates[p.rotation_index];
            GraspCandidate {
                x: p.x,
                y: p.y,
                rotation_index: p.rotation_index,
                angle_deg: t.angle_deg,
                depth_mm: contact_depth(img, t, p.x, p.y, plane_mm).unwrap_or(plane_mm),
                graspability: p.value,
                entanglement: 0.0,
                score: p.value,
                plane_mm,
            }
        })
        .collect()
}

/// Whether any object pixel lies within `reach` of `rect`.
fn any_object_near(object: &Mask, rect: &Rect, reach: usize) -> bool {
    let (w, h) = object.dims();
    let (x0, y0) = (rect.x.saturating_sub(reach), rect.y.saturating_sub(reach));
    let (x1, y1) = ((rect.x + rect.w + reach).min(w), (rect.y + rect.h + reach).min(h));
    (y0..y1).any(|y| object.row(y)[x0..x1].iter().any(|&o| o))
}

/// Grasp candidates over the whole image, sliced at the image's own plane.
pub fn detect(img: &DepthImage, cfg: &GraspConfig) -> Result<Vec<GraspCandidate>, GraspError> {
    let (w, h) = img.dims();
    detect_in_region(img, cfg, &Rect::new(0, 0, w, h))
}

/// Grasp candidates centered inside `region`. The image is cropped around
/// the region with enough margin for the hand stamp, and the slicing plane
/// is taken from that crop. Positions are in full-image coordinates.
pub fn detect_in_region(img: &DepthImage, cfg: &GraspConfig, region: &Rect) -> Result<Vec<GraspCandidate>, GraspError> {
    let (w, h) = img.dims();
    if region.w == 0 || region.h == 0 || region.x + region.w > w || region.y + region.h > h {
        return Err(GraspError::RegionOutOfBounds {
            region: *region,
            dims: (w, h),
        });
    }
    let templates = cfg.templates()?;
    let stamp = templates.iter().map(|t| t.half_extent).max().unwrap_or(0);
    let margin = stamp + (3.0 * cfg.smoothing_sigma_px()).ceil() as usize + 1;
    let x0 = region.x.saturating_sub(margin);
    let y0 = region.y.saturating_sub(margin);
    let x1 = (region.x + region.w + margin).min(w);
    let y1 = (region.y + region.h + margin).min(h);
    let crop = img.crop(x0, y0, x1 - x0, y1 - y0);
    let Some(plane) = slice_plane(&crop, cfg.grasp_depth_mm, cfg.floor_clearance_mm) else {
        return Ok(Vec::new());
    };
    let scene = SlicedScene::new(&crop, plane);
    let inner = Rect::new(region.x - x0, region.y - y0, region.w, region.h);
    if !any_object_near(&scene.object, &inner, stamp) {
        return Ok(Vec::new());
    }
    let (cw, ch) = scene.dims();
    let roi = Rect::new(
        inner.x.saturating_sub(1),
        inner.y.saturating_sub(1),
        (inner.x + inner.w + 1).min(cw) - inner.x.saturating_sub(1),
        (inner.y + inner.h + 1).min(ch) - inner.y.saturating_sub(1),
    );
    let maps: Vec<Grid<f64>> = templates.iter().map(|t| graspability_map_in(&scene, t, cfg, &roi)).collect();
    let peaks = extract_candidates(&maps, &inner, cfg.top_k, cfg.nms_radius_px());
    let mut cands = to_candidates(&crop, &templates, &peaks, plane);
    for c in &mut cands {
        c.x += x0;
        c.y += y0;
    }
    Ok(cands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::Intrinsics;

    fn image(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> DepthImage {
        DepthImage::new(Grid::from_fn(w, h, f), Intrinsics::centered(w, h, 1000.0))
    }

    #[test]
    fn plane_is_capped_above_floor() {
        let img = image(100, 100, |x, _| if x < 5 { 980.0 } else { 1000.0 });
        assert_eq!(slice_plane(&img, 25.0, 6.0), Some(994.0));
        let flat = image(10, 10, |_, _| 1000.0);
        assert_eq!(slice_plane(&flat, 25.0, 6.0), Some(994.0));
        let empty = image(10, 10, |_, _| 0.0);
        assert_eq!(slice_plane(&empty, 25.0, 6.0), None);
    }

    #[test]
    fn empty_bin_has_no_grasps() {
        let img = image(120, 120, |_, _| 1000.0);
        assert!(detect(&img, &GraspConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn fully_occupied_scene_is_all_collision() {
        let img = image(120, 120, |_, _| 900.0);
        let cfg = GraspConfig::default();
        let t = cfg.templates().unwrap();
        let scene = SlicedScene::new(&img, 925.0);
        for m in graspability_maps(&scene, &t, &cfg) {
            assert!(m.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn vertical_bar_is_grasped_across() {
        // A 10 px wide bar along y, at x = 55..65.
        let img = image(120, 160, |x, y| if (55..65).contains(&x) && (20..140).contains(&y) { 990.0 } else { 1000.0 });
        let cfg = GraspConfig::default();
        let t = cfg.templates().unwrap();
        let scene = SlicedScene::new(&img, 994.0);
        let maps = graspability_maps(&scene, &t, &cfg);
        assert!(maps[0][(60, 80)] > 0.0);
        assert_eq!(maps[2][(60, 80)], 0.0);
        let cands = detect(&img, &cfg).unwrap();
        assert!(!cands.is_empty());
        let top = cands[0];
        assert!((55..65).contains(&top.x));
        assert_eq!(top.depth_mm, 990.0);
        for c in &cands {
            assert!(!collides_at(&img, &t[c.rotation_index], c.x, c.y, c.plane_mm));
        }
    }

    #[test]
    fn contact_counts_match_brute_force() {
        let img = image(50, 40, |x, y| if (x * 7 + y * 3) % 11 < 3 { 990.0 } else { 1000.0 });
        let scene = SlicedScene::new(&img, 995.0);
        let hand = HandGeometry {
            open_width_px: 12.0,
            finger_w_px: 5.0,
            finger_h_px: 4.0,
        };
        for t in build_templates(hand, 4).unwrap() {
            for (x, y) in [(0, 0), (25, 20), (49, 39), (3, 30)] {
                let brute = |s: &Stamp, m: &Mask| {
                    s.offsets
                        .iter()
                        .filter(|&&(dx, dy)| {
                            let (xx, yy) = (x as i64 + dx as i64, y as i64 + dy as i64);
                            !m.contains(xx, yy) || m[(xx as usize, yy as usize)]
                        })
                        .count() as u32
                };
                let free = Mask::new(50, 40, false);
                let outside = brute(&t.contact, &free);
                assert_eq!(scene.contact_count(&t, x, y) + outside, brute(&t.contact, &scene.object));
                assert_eq!(scene.collision_count(&t, x, y), brute(&t.collision, &scene.blocked));
            }
        }
    }

    #[test]
    fn peaks_and_suppression() {
        let zero = Grid::new(40, 40, 0.0);
        let all = Rect::new(0, 0, 40, 40);
        assert!(extract_candidates(&[zero.clone()], &all, 5, 15.0).is_empty());

        let mut one = zero.clone();
        one[(10, 12)] = 0.5;
        let p = extract_candidates(&[zero.clone(), one.clone()], &all, 5, 15.0);
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].x, p[0].y, p[0].rotation_index), (10, 12, 1));

        let mut two = one.clone();
        two[(18, 12)] = 0.7;
        let p = extract_candidates(&[two.clone()], &all, 5, 15.0);
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].x, p[0].y), (18, 12));
        let p = extract_candidates(&[two], &all, 5, 5.0);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn invalid_pixels_block_fingers() {
        let mut img = image(120, 160, |x, y| if (55..65).contains(&x) && (20..140).contains(&y) { 990.0 } else { 1000.0 });
        for y in 0..160 {
            img.invalidate(30, y);
            img.invalidate(90, y);
        }
        let cands = detect(&img, &GraspConfig::default()).unwrap();
        let t = GraspConfig::default().templates().unwrap();
        for c in &cands {
            assert!(!collides_at(&img, &t[c.rotation_index], c.x, c.y, c.plane_mm));
        }
    }

    #[test]
    fn region_detection_stays_in_region() {
        let img = image(200, 160, |x, y| {
            let bar = |c: usize| (c..c + 10).contains(&x) && (20..140).contains(&y);
            if bar(40) || bar(150) { 990.0 } else { 1000.0 }
        });
        let region = Rect::new(120, 0, 80, 160);
        let cands = detect_in_region(&img, &GraspConfig::default(), &region).unwrap();
        assert!(!cands.is_empty());
        assert!(cands.iter().all(|c| region.contains(c.x, c.y)));
        assert!(cands.iter().all(|c| (150..160).contains(&c.x) || c.rotation_index != 0));
    }

    #[test]
    fn windowed_map_matches_full_blur() {
        let img = image(90, 80, |x, y| if (30..42).contains(&x) && (10..70).contains(&y) || (50..80).contains(&x) && (40..48).contains(&y) { 990.0 } else { 1000.0 });
        let cfg = GraspConfig::default();
        let scene = SlicedScene::new(&img, slice_plane(&img, cfg.grasp_depth_mm, cfg.floor_clearance_mm).unwrap());
        for t in cfg.templates().unwrap() {
            let (w, h) = scene.dims();
            let frac = Grid::from_fn(w, h, |x, y| scene.contact_count(&t, x, y) as f64 / t.contact.len() as f64);
            let smooth = gaussian_blur(&frac, cfg.smoothing_sigma_px());
            let roi = Rect::new(20, 15, 40, 30);
            let m = graspability_map_in(&scene, &t, &cfg, &roi);
            for (x, y, &v) in m.iter_xy() {
                let ok = scene.contact_count(&t, x, y) >= cfg.min_contact_px && scene.collision_count(&t, x, y) == 0;
                let want = if roi.contains(x, y) && ok { smooth[(x, y)] } else { 0.0 };
                assert_eq!(v, want, "({x}, {y})");
            }
        }
    }
}
