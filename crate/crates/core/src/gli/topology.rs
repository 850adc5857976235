//! Writhe matrix and the topology coordinate derived from it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{AnalyticGli, GliKernel};
use super::segment::Segment3D;
use super::GliError;
use crate::grid::{raster_line, Mask};

/// Value stored for pairs whose segments (nearly) touch.
pub const SATURATED_GLI: f64 = 0.5;

/// Binary image covering the two center segments.
pub type CenterMask = Mask;

/// Strictly upper-triangular store of pairwise `|GLI|`.
#[derive(Debug, Clone, PartialEq)]
pub struct WritheMatrix {
    n: usize,
    values: Vec<f64>,
}

impl WritheMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    /// Builds a matrix from explicit `(i, j, value)` entries.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self, GliError> {
        let mut m = Self::zeros(n);
        for &(i, j, value) in entries {
            if i >= j || j >= n || !(value >= 0.0) || !value.is_finite() {
                return Err(GliError::InvalidEntry { i, j, value });
            }
            m.values[i * n + j] = value;
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major view of the full `n × n` matrix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Non-zero upper-triangular entries in row-major order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let v = self.values[i * n + j];
                (v > 0.0).then_some((i, j, v))
            })
        })
    }

    /// Restriction to the rows and columns in `idx` (ascending, distinct).
    pub fn submatrix(&self, idx: &[usize]) -> WritheMatrix {
        let m = idx.len();
        let mut sub = Self::zeros(m);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().skip(a + 1) {
                sub.values[a * m + b] = self.get(i, j);
            }
        }
        sub
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Pairwise `|GLI|` of all segments using the closed-form kernel.
pub fn writhe_matrix(segments: &[Segment3D]) -> Result<WritheMatrix, GliError> {
    writhe_matrix_with(segments, &AnalyticGli::default())
}

/// Two segments with a common endpoint span one plane, so their GLI is
/// exactly zero even though their distance is zero.
fn share_endpoint(a: &Segment3D, b: &Segment3D) -> bool {
    let (a0, a1, b0, b1) = (a.p0(), a.p1(), b.p0(), b.p1());
    a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1
}

/// Pairwise `|GLI|` using `kernel`. Near-singular pairs saturate at
/// [`SATURATED_GLI`], except consecutive pieces of one polyline (a shared
/// endpoint), which contribute zero.
pub fn writhe_matrix_with(
    segments: &[Segment3D],
    kernel: &dyn GliKernel,
) -> Result<WritheMatrix, GliError> {
    let n = segments.len();
    if n < 2 {
        return Err(GliError::TooFewSegments(n));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| match kernel.gli(&segments[i], &segments[j]) {
                    Ok(v) => Ok(v.abs()),
                    Err(GliError::NearSingular { .. }) if share_endpoint(&segments[i], &segments[j]) => {
                        Ok(0.0)
                    }
                    Err(GliError::NearSingular { .. }) => Ok(SATURATED_GLI),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<f64>, GliError>>()
        })
        .collect::<Result<_, _>>()?;

    let mut m = WritheMatrix::zeros(n);
    for (i, row) in rows.into_iter().enumerate() {
        m.values[i * n + i + 1..(i + 1) * n].copy_from_slice(&row);
    }
    Ok(m)
}

/// Sum of all entries divided by the number of segments.
pub fn writhe(t: &WritheMatrix) -> f64 {
    if t.n == 0 {
        return 0.0;
    }
    t.total() / t.n as f64
}

/// Fraction of non-zero entries strictly above the mean of the non-zero entries.
pub fn density(t: &WritheMatrix) -> f64 {
    let (count, sum) = t.nonzero().fold((0usize, 0.0), |(c, s), (_, _, v)| (c + 1, s + v));
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let above = t.nonzero().filter(|&(_, _, v)| v > mean).count();
    above as f64 / count as f64
}

/// Mass-weighted centroid of the non-zero support, snapped to the nearest
/// non-zero entry (ties toward smaller `i`, then smaller `j`).
pub fn center(t: &WritheMatrix) -> Result<(usize, usize), GliError> {
    let (mass, mi, mj) = t
        .nonzero()
        .fold((0.0, 0.0, 0.0), |(m, a, b), (i, j, v)| {
            (m + v, a + v * i as f64, b + v * j as f64)
        });
    if mass == 0.0 {
        return Err(GliError::AllZeroMatrix);
    }
    let (ci, cj) = (mi / mass, mj / mass);
    let mut best: Option<(f64, usize, usize)> = None;
    // nonzero() is row-major, so keeping the first strict minimum applies the tie rule.
    for (i, j, _) in t.nonzero() {
        let d2 = (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2);
        if best.is_none_or(|(bd, _, _)| d2 < bd) {
            best = Some((d2, i, j));
        }
    }
    let (_, i, j) = best.expect("non-zero mass implies a non-zero entry");
    Ok((i, j))
}

/// Rasterizes the pixel footprints of both center segments and dilates them.
pub fn center_mask(
    segments: &[Segment3D],
    c: (usize, usize),
    image_dims: (usize, usize),
    dilation_px: usize,
) -> Result<CenterMask, GliError> {
    let (i, j) = c;
    if i >= j || j >= segments.len() {
        return Err(GliError::InvalidCenter(i, j));
    }
    let (w, h) = image_dims;
    let mut mask = Mask::new(w, h, false);
    for s in [&segments[i], &segments[j]] {
        let (a, b) = (s.pixel_p0(), s.pixel_p1());
        let pixels = raster_line(
            a.x.round() as i64,
            a.y.round() as i64,
            b.x.round() as i64,
            b.y.round() as i64,
        );
        for (x, y) in pixels {
            if mask.contains(x, y) {
                mask[(x as usize, y as usize)] = true;
            }
        }
    }
    Ok(mask.dilate(dilation_px))
}

/// Writhe, density and center of one scene (or one window of it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyCoordinate {
    pub writhe: f64,
    pub density: f64,
    /// Segment pair at the center of entanglement; `None` when the matrix is all zero.
    pub center: Option<(usize, usize)>,
}

impl TopologyCoordinate {
    pub const ZERO: Self = Self {
        writhe: 0.0,
        density: 0.0,
        center: None,
    };

    pub fn from_matrix(t: &WritheMatrix) -> Self {
        Self {
            writhe: writhe(t),
            density: density(t),
            center: center(t).ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn seg(a: [f64; 3], b: [f64; 3]) -> Segment3D {
        Segment3D::new(Vector3::from(a), Vector3::from(b)).unwrap()
    }

    #[test]
    fn coplanar_pair_gives_zero_matrix() {
        let m = writhe_matrix(&[
            seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            seg([0.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
        ])
        .unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
        assert_eq!(writhe(&m), 0.0);
        assert_eq!(density(&m), 0.0);
        assert_eq!(center(&m), Err(GliError::AllZeroMatrix));
    }

    #[test]
    fn too_few_segments() {
        assert_eq!(
            writhe_matrix(&[seg([0.0; 3], [1.0, 0.0, 0.0])]),
            Err(GliError::TooFewSegments(1))
        );
    }

    #[test]
    fn touching_pair_saturates() {
        let m = writhe_matrix(&[
            seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            seg([0.0, -1.0, 0.0], [0.0, 1.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(m.get(0, 1), SATURATED_GLI);
    }

    #[test]
    fn polyline_neighbors_do_not_saturate() {
        let m = writhe_matrix(&[
            seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            seg([1.0, 0.0, 0.0], [1.0, 1.0, 0.5]),
        ])
        .unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn writhe_of_single_entry() {
        let m = WritheMatrix::from_entries(2, &[(0, 1, 0.3)]).unwrap();
        assert_eq!(writhe(&m), 0.15);
    }

    #[test]
    fn density_cases() {
        let uniform =
            WritheMatrix::from_entries(5, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)])
                .unwrap();
        assert_eq!(density(&uniform), 0.0);
        let skewed =
            WritheMatrix::from_entries(5, &[(0, 1, 0.1), (1, 2, 0.1), (2, 3, 0.1), (3, 4, 0.9)])
                .unwrap();
        assert_eq!(density(&skewed), 0.25);
        assert_eq!(density(&WritheMatrix::zeros(3)), 0.0);
    }

    #[test]
    fn center_cases() {
        let single = WritheMatrix::from_entries(6, &[(2, 5, 0.2)]).unwrap();
        assert_eq!(center(&single), Ok((2, 5)));
        let tie = WritheMatrix::from_entries(6, &[(1, 3, 0.2), (1, 5, 0.2)]).unwrap();
        assert_eq!(center(&tie), Ok((1, 3)));
        let far = WritheMatrix::from_entries(6, &[(0, 1, 0.3), (4, 5, 0.1)]).unwrap();
        assert_eq!(center(&far), Ok((0, 1)));
    }

    #[test]
    fn from_entries_rejects_lower_triangle_and_negatives() {
        assert!(WritheMatrix::from_entries(3, &[(1, 1, 0.1)]).is_err());
        assert!(WritheMatrix::from_entries(3, &[(2, 1, 0.1)]).is_err());
        assert!(WritheMatrix::from_entries(3, &[(0, 1, -0.1)]).is_err());
        assert!(WritheMatrix::from_entries(3, &[(0, 3, 0.1)]).is_err());
    }

    #[test]
    fn center_mask_without_dilation_is_the_raster_line() {
        let a = seg([0.0; 3], [1.0, 0.0, 0.0])
            .with_pixels([10.0, 10.0].into(), [20.0, 10.0].into());
        let b = seg([0.0, 0.0, 1.0], [1.0, 0.0, 1.0])
            .with_pixels([10.0, 10.0].into(), [20.0, 10.0].into());
        let mask = center_mask(&[a, b], (0, 1), (64, 48), 0).unwrap();
        assert_eq!(mask.dims(), (64, 48));
        assert_eq!(mask.count(), 11);
        assert!((10..=20).all(|x| mask[(x, 10)]));
        let dilated = center_mask(&[a, b], (0, 1), (64, 48), 8).unwrap();
        assert!(dilated.count() > 11 * 16);
        assert!(center_mask(&[a, b], (1, 0), (64, 48), 0).is_err());
    }
}
