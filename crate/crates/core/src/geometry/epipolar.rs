//! Two-view epipolar geometry: fundamental matrices and dense grid-to-grid
//! epipolar distance maps.
//!
//! For a target pixel `x_t` (homogeneous, pixel units) the epipolar line in
//! the reference image is `l = F * x_t`, and any reference pixel `x_r` on the
//! corresponding ray satisfies `x_r^T F x_t = 0`. With world-to-camera
//! extrinsics the relative motion target -> reference is
//!   `R_rel = R_ref * R_tgt^T`,  `t_rel = T_ref - R_rel * T_tgt`,
//! giving `F = K_ref^-T * [t_rel]_x * R_rel * K_tgt^-1`.
//!
//! A second, "literal" form is kept behind [`FundamentalForm::Literal`]: it
//! uses `t = T_ref - R_tgt^T * T_tgt` and a `K_ref^-1` left factor. It does
//! not satisfy the projective epipolar constraint for general poses and
//! exists only so the two conventions can be compared side by side.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::camera::{CameraIntrinsics, CameraView};

/// Baselines at or below this magnitude are rejected as degenerate.
pub const BASELINE_EPSILON: f64 = 1e-12;

/// Epipolar lines whose direction part satisfies `a^2 + b^2` below this
/// threshold have no finite pixel locus and are handled via a sentinel.
pub const LINE_EPSILON: f64 = 1e-18;

/// Which fundamental-matrix convention to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FundamentalForm {
    /// Geometrically consistent form: validated by the projected-point
    /// epipolar-constraint oracle.
    #[default]
    Validated,
    /// Word-for-word transcription of the alternative convention
    /// (`K_ref^-1` left factor, `t = T_ref - R_tgt^T T_tgt`).
    Literal,
}

/// Cross-product (skew-symmetric) matrix of `t`.
pub fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Relative rigid motion mapping target-camera coordinates into
/// reference-camera coordinates: `x_ref = R * x_tgt + t`.
pub fn relative_motion(tgt: &CameraView, reference: &CameraView) -> (Matrix3<f64>, Vector3<f64>) {
    let r_rel = reference.extrinsics.rotation() * tgt.extrinsics.rotation().transpose();
    let t_rel = reference.extrinsics.translation() - r_rel * tgt.extrinsics.translation();
    (r_rel, t_rel)
}

/// Fundamental matrix mapping target pixels to reference epipolar lines,
/// normalized to unit Frobenius norm.
pub fn fundamental_matrix(tgt: &CameraView, reference: &CameraView) -> Result<Matrix3<f64>> {
    fundamental_matrix_with(tgt, reference, FundamentalForm::Validated)
}

pub fn fundamental_matrix_with(
    tgt: &CameraView,
    reference: &CameraView,
    form: FundamentalForm,
) -> Result<Matrix3<f64>> {
    let (r_rel, t_rel) = relative_motion(tgt, reference);
    let raw = match form {
        FundamentalForm::Validated => {
            check_baseline(&t_rel)?;
            reference.intrinsics.inverse_matrix().transpose()
                * skew(&t_rel)
                * r_rel
                * tgt.intrinsics.inverse_matrix()
        }
        FundamentalForm::Literal => {
            let t_lit = reference.extrinsics.translation()
                - tgt.extrinsics.rotation().transpose() * tgt.extrinsics.translation();
            check_baseline(&t_lit)?;
            reference.intrinsics.inverse_matrix() * skew(&t_lit) * r_rel * tgt.intrinsics.inverse_matrix()
        }
    };
    let norm = raw.norm();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateBaseline { magnitude: 0.0 });
    }
    Ok(raw / norm)
}

fn check_baseline(t: &Vector3<f64>) -> Result<()> {
    let magnitude = t.norm();
    if magnitude <= BASELINE_EPSILON {
        return Err(Error::DegenerateBaseline { magnitude });
    }
    Ok(())
}

/// Epipolar line `[a, b, c]` in the reference image for a target pixel.
pub fn epipolar_line(f: &Matrix3<f64>, x: f64, y: f64) -> Vector3<f64> {
    f * Vector3::new(x, y, 1.0)
}

/// Perpendicular distance from pixel `(x, y)` to the line `[a, b, c]`, in
/// pixel units. `None` when the line has no finite locus.
pub fn point_line_distance(line: &Vector3<f64>, x: f64, y: f64) -> Option<f64> {
    let n2 = line.x * line.x + line.y * line.y;
    if n2 < LINE_EPSILON {
        return None;
    }
    Some((line.x * x + line.y * y + line.z).abs() / n2.sqrt())
}

/// Options for [`epipolar_distance_map`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DistanceMapOptions {
    pub form: FundamentalForm,
    /// Value used for rows whose epipolar line is degenerate. `None` picks
    /// the maximum finite distance present in the map (0 if there is none).
    pub sentinel: Option<f64>,
}

/// Dense distance table between a target grid and a reference grid.
///
/// Row `p` (target cell, row-major) holds the distance from every reference
/// cell `q` to the epipolar line induced by target cell `p`. Grid cells are
/// mapped to full-resolution pixel centers before any geometry is evaluated,
/// so all distances are in full-resolution reference-pixel units.
#[derive(Debug, Clone, PartialEq)]
pub struct EpipolarDistanceMap {
    target_dims: (usize, usize),
    ref_dims: (usize, usize),
    values: Vec<f64>,
    degenerate_rows: Vec<usize>,
}

impl EpipolarDistanceMap {
    /// Build a map from precomputed distances (row-major over target cells,
    /// then reference cells). Useful for custom pencils and tests; entries
    /// must be finite and nonnegative.
    pub fn from_values(
        target_dims: (usize, usize),
        ref_dims: (usize, usize),
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = target_dims.0 * target_dims.1 * ref_dims.0 * ref_dims.1;
        if values.len() != expected || expected == 0 {
            return Err(Error::ShapeMismatch {
                context: "distance map buffer length",
                expected: format!("{expected}"),
                actual: format!("{}", values.len()),
            });
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::ShapeMismatch {
                context: "distance map entries",
                expected: "finite nonnegative distances".into(),
                actual: "negative or non-finite entry".into(),
            });
        }
        Ok(EpipolarDistanceMap { target_dims, ref_dims, values, degenerate_rows: Vec::new() })
    }

    /// Target grid `(rows, cols)`.
    pub fn target_dims(&self) -> (usize, usize) {
        self.target_dims
    }

    /// Reference grid `(rows, cols)`.
    pub fn ref_dims(&self) -> (usize, usize) {
        self.ref_dims
    }

    pub fn target_len(&self) -> usize {
        self.target_dims.0 * self.target_dims.1
    }

    pub fn ref_len(&self) -> usize {
        self.ref_dims.0 * self.ref_dims.1
    }

    /// Distance row for flattened target cell `p`.
    pub fn row(&self, p: usize) -> &[f64] {
        let n = self.ref_len();
        &self.values[p * n..(p + 1) * n]
    }

    pub fn value(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.ref_len() + q]
    }

    /// Flattened target rows whose epipolar line was degenerate and were
    /// filled with the sentinel distance.
    pub fn degenerate_rows(&self) -> &[usize] {
        &self.degenerate_rows
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Map grid cell `(i, j)` of an `h x w` grid onto the center of the
/// corresponding full-resolution pixel block.
pub fn grid_cell_to_pixel(i: usize, j: usize, grid: (usize, usize), full: (u32, u32)) -> (f64, f64) {
    let (h, w) = grid;
    let (full_w, full_h) = full;
    (
        (j as f64 + 0.5) * full_w as f64 / w as f64,
        (i as f64 + 0.5) * full_h as f64 / h as f64,
    )
}

/// Dense epipolar distance map between two views at the given grid
/// resolutions (target rows may be computed in parallel; the result is
/// independent of the schedule).
pub fn epipolar_distance_map(
    tgt: &CameraView,
    reference: &CameraView,
    tgt_grid: (usize, usize),
    ref_grid: (usize, usize),
    options: DistanceMapOptions,
) -> Result<EpipolarDistanceMap> {
    let f = fundamental_matrix_with(tgt, reference, options.form)?;
    distance_map_for_fundamental(&f, &tgt.intrinsics, &reference.intrinsics, tgt_grid, ref_grid, options.sentinel)
}

/// Same as [`epipolar_distance_map`] but with a caller-supplied fundamental
/// matrix (the target/reference intrinsics only provide image dimensions).
pub fn distance_map_for_fundamental(
    f: &Matrix3<f64>,
    tgt_intrinsics: &CameraIntrinsics,
    ref_intrinsics: &CameraIntrinsics,
    tgt_grid: (usize, usize),
    ref_grid: (usize, usize),
    sentinel: Option<f64>,
) -> Result<EpipolarDistanceMap> {
    let (th, tw) = tgt_grid;
    let (rh, rw) = ref_grid;
    if th == 0 || tw == 0 || rh == 0 || rw == 0 {
        return Err(Error::ShapeMismatch {
            context: "distance map grid dims",
            expected: "positive dims".into(),
            actual: format!("target {th}x{tw}, reference {rh}x{rw}"),
        });
    }
    let n_ref = rh * rw;
    let ref_full = (ref_intrinsics.width(), ref_intrinsics.height());
    let ref_pixels: Vec<(f64, f64)> = (0..n_ref)
        .map(|q| grid_cell_to_pixel(q / rw, q % rw, ref_grid, ref_full))
        .collect();
    let tgt_full = (tgt_intrinsics.width(), tgt_intrinsics.height());

    let mut values = vec![0.0f64; th * tw * n_ref];
    let degenerate: Vec<usize> = values
        .par_chunks_mut(n_ref)
        .enumerate()
        .filter_map(|(p, row)| {
            let (x, y) = grid_cell_to_pixel(p / tw, p % tw, tgt_grid, tgt_full);
            let line = epipolar_line(f, x, y);
            let n2 = line.x * line.x + line.y * line.y;
            if n2 < LINE_EPSILON {
                // Filled with the sentinel after the scan.
                return Some(p);
            }
            let inv_n = 1.0 / n2.sqrt();
            for (d, &(rx, ry)) in row.iter_mut().zip(&ref_pixels) {
                *d = (line.x * rx + line.y * ry + line.z).abs() * inv_n;
            }
            None
        })
        .collect();

    if !degenerate.is_empty() {
        let fill = sentinel.unwrap_or_else(|| {
            let mut mx = 0.0f64;
            let deg: std::collections::HashSet<usize> = degenerate.iter().copied().collect();
            for p in 0..th * tw {
                if deg.contains(&p) {
                    continue;
                }
                for &v in &values[p * n_ref..(p + 1) * n_ref] {
                    mx = mx.max(v);
                }
            }
            mx
        });
        for &p in &degenerate {
            values[p * n_ref..(p + 1) * n_ref].fill(fill);
        }
    }

    let mut degenerate_rows = degenerate;
    degenerate_rows.sort_unstable();
    Ok(EpipolarDistanceMap { target_dims: tgt_grid, ref_dims: ref_grid, values, degenerate_rows })
}
