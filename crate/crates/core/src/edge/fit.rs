//! Chains of edge pixels, split-and-merge polyline fitting and 3D lifting.

use nalgebra::Vector2;

use super::detect::neighbors8;
use super::{EdgeConfig, EdgeSegmentSet};
use crate::depth::{backproject, DepthImage};
use crate::gli::Segment3D;
use crate::grid::Mask;

pub type Pixel = (usize, usize);

/// Groups edge pixels into 8-connected chains.
///
/// Open chains are traced first, starting from endpoints in raster order;
/// what remains (closed loops, leftovers at junctions) is traced from its
/// first pixel in raster order. The walk prefers 4-neighbors over diagonals.
pub fn trace_chains(edges: &Mask) -> Vec<Vec<Pixel>> {
    let (w, h) = edges.dims();
    let mut visited = Mask::new(w, h, false);
    let mut chains = Vec::new();
    let free = |visited: &Mask, x: usize, y: usize| {
        neighbors8(x, y, w, h)
            .filter(|&(nx, ny)| edges[(nx, ny)] && !visited[(nx, ny)])
            .count()
    };

    for endpoints_only in [true, false] {
        for y in 0..h {
            for x in 0..w {
                if !edges[(x, y)] || visited[(x, y)] {
                    continue;
                }
                if endpoints_only && free(&visited, x, y) > 1 {
                    continue;
                }
                chains.push(walk(edges, &mut visited, (x, y)));
            }
        }
    }
    chains
}

fn walk(edges: &Mask, visited: &mut Mask, start: Pixel) -> Vec<Pixel> {
    let (w, h) = edges.dims();
    let mut chain = vec![start];
    visited[start] = true;
    let mut cur = start;
    // neighbors8 lists the four axis neighbors before the diagonals.
    while let Some(next) =
        neighbors8(cur.0, cur.1, w, h).find(|&p| edges[p] && !visited[p])
    {
        visited[next] = true;
        chain.push(next);
        cur = next;
    }
    chain
}

fn to_vec(p: Pixel) -> Vector2<f64> {
    Vector2::new(p.0 as f64, p.1 as f64)
}

/// Distance from `p` to the line through `a` and `b` (to `a` when they coincide).
fn line_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return (p - a).norm();
    }
    (d.x * (p.y - a.y) - d.y * (p.x - a.x)).abs() / len
}

fn max_deviation(chain: &[Pixel], i: usize, j: usize) -> (f64, usize) {
    let (a, b) = (to_vec(chain[i]), to_vec(chain[j]));
    let mut best = (0.0, i);
    for (k, &p) in chain.iter().enumerate().take(j).skip(i + 1) {
        let d = line_distance(to_vec(p), a, b);
        if d > best.0 {
            best = (d, k);
        }
    }
    best
}

/// Recursive max-deviation split: breakpoints (chain indices, first and
/// last included) such that every piece deviates at most `tol` from its chord.
pub fn split_chain(chain: &[Pixel], tol: f64) -> Vec<usize> {
    if chain.len() < 2 {
        return Vec::new();
    }
    let mut breaks = vec![0];
    let mut stack = vec![(0, chain.len() - 1)];
    // Depth-first with the right half pushed first keeps breakpoints ordered.
    while let Some((i, j)) = stack.pop() {
        let (dev, k) = max_deviation(chain, i, j);
        if dev > tol && k > i && k < j {
            stack.push((k, j));
            stack.push((i, k));
        } else {
            breaks.push(j);
        }
    }
    breaks
}

fn direction_angle_deg(chain: &[Pixel], i: usize, j: usize) -> f64 {
    let d = to_vec(chain[j]) - to_vec(chain[i]);
    d.y.atan2(d.x).to_degrees()
}

/// Removes breakpoints between near-collinear neighbors when the merged piece
/// still fits within `tol`.
pub fn merge_collinear(chain: &[Pixel], breaks: &mut Vec<usize>, tol: f64, max_angle_deg: f64) {
    let mut k = 1;
    while k + 1 < breaks.len() {
        let (i, m, j) = (breaks[k - 1], breaks[k], breaks[k + 1]);
        let turn = (direction_angle_deg(chain, m, j) - direction_angle_deg(chain, i, m) + 540.0)
            .rem_euclid(360.0)
            - 180.0;
        if turn.abs() < max_angle_deg && max_deviation(chain, i, j).0 <= tol {
            breaks.remove(k);
        } else {
            k += 1;
        }
    }
}

/// Inserts breakpoints so no piece is longer than `max_len` pixels.
pub fn subdivide(chain: &[Pixel], breaks: &[usize], max_len: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(breaks.len());
    for win in breaks.windows(2) {
        let (i, j) = (win[0], win[1]);
        out.push(i);
        let len = (to_vec(chain[j]) - to_vec(chain[i])).norm();
        let pieces = (len / max_len).ceil() as usize;
        for m in 1..pieces {
            let k = i + ((j - i) * m + pieces / 2) / pieces;
            if k > *out.last().unwrap() && k < j {
                out.push(k);
            }
        }
    }
    if let Some(&last) = breaks.last() {
        out.push(last);
    }
    out
}

/// Pixel-space pieces of all chains, after split, merge, subdivision and the
/// minimum-length filter.
pub fn fit_pixel_segments(edges: &Mask, cfg: &EdgeConfig) -> Vec<(Pixel, Pixel)> {
    let mut out = Vec::new();
    for chain in trace_chains(edges) {
        let mut breaks = split_chain(&chain, cfg.fit_tol_px);
        merge_collinear(&chain, &mut breaks, cfg.fit_tol_px, cfg.merge_angle_deg);
        if let Some(max_len) = cfg.max_seg_len_px {
            breaks = subdivide(&chain, &breaks, max_len);
        }
        for win in breaks.windows(2) {
            let (a, b) = (chain[win[0]], chain[win[1]]);
            if (to_vec(b) - to_vec(a)).norm() >= cfg.min_len_px {
                out.push((a, b));
            }
        }
    }
    out
}

/// Fits straight segments to the edge pixels and lifts them into camera space.
///
/// Endpoint depth is the nearest valid depth in the 3×3 neighborhood, which
/// attaches a contour to the occluding surface. Pieces whose endpoints have no
/// valid depth, or whose 3D length is below `cfg.min_len_mm`, are dropped.
pub fn fit_segments(edges: &Mask, img: &DepthImage, cfg: &EdgeConfig) -> EdgeSegmentSet {
    assert_eq!(edges.dims(), img.dims(), "edge mask and depth image differ in size");
    let k = img.intrinsics();
    let lift = |p: Pixel| {
        let z = img.min_depth_near(p.0, p.1, 1)?;
        let px = to_vec(p);
        backproject(px, z, k).ok().map(|v| (v, px))
    };
    let segments = fit_pixel_segments(edges, cfg)
        .into_iter()
        .filter_map(|(a, b)| {
            let ((pa, ua), (pb, ub)) = (lift(a)?, lift(b)?);
            Segment3D::with_min_len(pa, pb, cfg.min_len_mm)
                .ok()
                .map(|s| s.with_pixels(ua, ub))
        })
        .collect();
    EdgeSegmentSet {
        segments,
        source_dims: img.dims(),
    }
}
