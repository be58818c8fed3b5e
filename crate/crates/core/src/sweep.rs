//! Fronto-parallel plane-sweep warping and cost volumes.
//!
//! Feature grids from neighboring views are warped into a reference view at
//! a sweep of depth hypotheses; per-pixel similarity against the reference
//! features forms a cost volume whose argmax over depth recovers geometry.
//!
//! Depth candidates are spaced uniformly in inverse depth by default, which
//! allocates resolution near the camera where a pixel of parallax covers the
//! least metric distance; linear spacing is available as an option.

use crate::error::{Error, Result};
use crate::geometry::CameraView;
use crate::grid::{FeatureGrid, Padding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthSpacing {
    #[default]
    InverseDepth,
    Linear,
}

/// Sample `count` depth candidates in `[near, far]`. For `count >= 2` the
/// first candidate is exactly `near` and the last exactly `far`; a single
/// candidate sits at `near`.
pub fn sample_depth_candidates(near: f64, far: f64, count: usize, spacing: DepthSpacing) -> Result<Vec<f64>> {
    if !(near.is_finite() && far.is_finite()) || near <= 0.0 || far <= near {
        return Err(Error::InvalidRange { near, far });
    }
    if count == 0 {
        return Err(Error::InvalidRange { near, far });
    }
    if count == 1 {
        return Ok(vec![near]);
    }
    let n = (count - 1) as f64;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / n;
        let d = match spacing {
            DepthSpacing::InverseDepth => {
                let inv = (1.0 - t) / near + t / far;
                1.0 / inv
            }
            DepthSpacing::Linear => near + t * (far - near),
        };
        out.push(d);
    }
    // Pin the endpoints exactly; the interpolation above can wobble by an ulp.
    out[0] = near;
    out[count - 1] = far;
    Ok(out)
}

/// A warped feature grid plus its per-cell validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub features: FeatureGrid,
    /// `valid[i * w + j]` is true iff the cell's reprojection landed inside
    /// the source grid (`[0, w) x [0, h)` in continuous grid coordinates)
    /// and in front of the source camera.
    pub valid: Vec<bool>,
}

/// Warp `src` features (attached to `src_view`) onto the pixel lattice of
/// `dst_view`, assuming all geometry lies on the fronto-parallel plane at
/// camera-space depth `depth` in the destination view.
///
/// Out-of-bounds samples read as zero and are flagged invalid.
pub fn warp_feature(
    src: &FeatureGrid,
    src_view: &CameraView,
    dst_view: &CameraView,
    depth: f64,
) -> Result<WarpResult> {
    if depth <= 0.0 || !depth.is_finite() {
        return Err(Error::InvalidRange { near: depth, far: depth });
    }
    let (h, w) = src.dims();
    let c = src.channels();
    let dst_w_full = dst_view.intrinsics.width() as f64;
    let dst_h_full = dst_view.intrinsics.height() as f64;
    let src_w_full = src_view.intrinsics.width() as f64;
    let src_h_full = src_view.intrinsics.height() as f64;

    let mut features = FeatureGrid::zeros(h, w, c);
    let mut valid = vec![false; h * w];
    let mut buf = vec![0.0; c];
    for i in 0..h {
        for j in 0..w {
            // Destination grid cell -> full-resolution pixel center.
            let x = (j as f64 + 0.5) * dst_w_full / w as f64;
            let y = (i as f64 + 0.5) * dst_h_full / h as f64;
            let world = dst_view.backproject_pixel(x, y, depth);
            let Some((sx_px, sy_px, _)) = src_view.project_point(&world) else {
                continue; // behind the source camera
            };
            // Full-resolution source pixel -> source grid coordinates.
            let gx = sx_px * w as f64 / src_w_full;
            let gy = sy_px * h as f64 / src_h_full;
            let inside = gx >= 0.0 && gx < w as f64 && gy >= 0.0 && gy < h as f64;
            if inside {
                valid[i * w + j] = true;
            }
            src.sample_bilinear(gx, gy, Padding::Zero, &mut buf);
            features.set(i, j, &buf);
        }
    }
    Ok(WarpResult { features, valid })
}

/// Plane-sweep cost volume over a reference view.
///
/// `values[p * depth_count + m]` holds, for flattened reference cell `p` and
/// depth candidate `m`, the mean over the other views of the channel-averaged
/// inner product between the warped features and the reference features.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    height: usize,
    width: usize,
    depths: Vec<f64>,
    values: Vec<f64>,
    /// Number of views whose warp was valid at each `(cell, depth)` entry.
    valid_counts: Vec<u32>,
    view_count: usize,
}

impl CostVolume {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn depth_count(&self) -> usize {
        self.depths.len()
    }

    pub fn value(&self, p: usize, m: usize) -> f64 {
        self.values[p * self.depths.len() + m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_count(&self, p: usize, m: usize) -> u32 {
        self.valid_counts[p * self.depths.len() + m]
    }

    /// Cells whose warps were valid for every contributing view at every
    /// depth candidate — the cells where an argmax over depth is trustworthy.
    pub fn fully_valid_mask(&self) -> Vec<bool> {
        let d = self.depths.len();
        (0..self.height * self.width)
            .map(|p| (0..d).all(|m| self.valid_counts[p * d + m] as usize == self.view_count))
            .collect()
    }

    /// Index of the best-scoring depth candidate per cell (ties to the
    /// lowest index).
    pub fn argmax_depth(&self) -> Vec<usize> {
        let d = self.depths.len();
        (0..self.height * self.width)
            .map(|p| {
                let row = &self.values[p * d..(p + 1) * d];
                let mut best = 0;
                for m in 1..d {
                    if row[m] > row[best] {
                        best = m;
                    }
                }
                best
            })
            .collect()
    }

    /// One depth slice as a single-channel grid (for export/visualization).
    pub fn slice(&self, m: usize) -> FeatureGrid {
        let d = self.depths.len();
        FeatureGrid::from_fn(self.height, self.width, 1, |i, j| {
            vec![self.values[(i * self.width + j) * d + m]]
        })
    }
}

/// Build a cost volume for `ref_view` from `others`, all feature grids at
/// the same resolution and channel count.
pub fn build_cost_volume(
    ref_features: &FeatureGrid,
    ref_view: &CameraView,
    others: &[(&FeatureGrid, &CameraView)],
    depths: &[f64],
) -> Result<CostVolume> {
    if others.is_empty() {
        return Err(Error::EmptyInputSet);
    }
    if depths.is_empty() {
        return Err(Error::InvalidRange { near: 0.0, far: 0.0 });
    }
    let (h, w) = ref_features.dims();
    let c = ref_features.channels();
    for (feat, _) in others {
        if feat.dims() != (h, w) || feat.channels() != c {
            return Err(Error::ShapeMismatch {
                context: "cost volume feature grids",
                expected: format!("{h}x{w}x{c}"),
                actual: format!("{}x{}x{}", feat.height(), feat.width(), feat.channels()),
            });
        }
    }

    let d = depths.len();
    let mut values = vec![0.0f64; h * w * d];
    let mut valid_counts = vec![0u32; h * w * d];
    let inv_views = 1.0 / others.len() as f64;
    let inv_c = 1.0 / c as f64;

    for (m, &depth) in depths.iter().enumerate() {
        for (feat, view) in others {
            let warp = warp_feature(feat, view, ref_view, depth)?;
            for p in 0..h * w {
                let (i, j) = (p / w, p % w);
                let wf = warp.features.get(i, j);
                let rf = ref_features.get(i, j);
                let dot: f64 = wf.iter().zip(rf).map(|(a, b)| a * b).sum();
                values[p * d + m] += dot * inv_c * inv_views;
                if warp.valid[p] {
                    valid_counts[p * d + m] += 1;
                }
            }
        }
    }

    Ok(CostVolume { height: h, width: w, depths: depths.to_vec(), values, valid_counts, view_count: others.len() })
}
