//! Reference-view selection by camera proximity and viewing-direction
//! agreement.
//!
//! Each candidate input view is scored against the target view by combining
//! proximity and orientation agreement:
//!
//! ```text
//! score = 1 / max(dist, 1e-8)  +  (angle + 1) / 2
//! ```
//!
//! where `dist` is the Euclidean distance between the camera positions and
//! `angle` is the cosine between the two optical axes. By default, positions
//! are the world-space camera centers `-R^T T` and axes are the world-space
//! viewing directions; both can be switched to the raw stored quantities for
//! comparison with conventions that score translation vectors directly.

use crate::error::{Error, Result};
use crate::geometry::CameraView;

/// Guard against division by zero for coincident cameras.
pub const DISTANCE_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct SelectionConfig {
    /// Measure distance between camera centers (`-R^T T`). When `false`,
    /// the raw translation vectors are compared instead.
    pub use_camera_centers: bool,
    /// Use the world-space optical axis for the angular term. When `false`,
    /// the third column of the stored world-to-camera rotation is used.
    pub world_viewing_axis: bool,
    /// Rescale all candidate distances by the maximum distance in the set
    /// before scoring, making the proximity term scale-free.
    pub normalize_distances: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { use_camera_centers: true, world_viewing_axis: true, normalize_distances: false }
    }
}

/// Score components for one candidate view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapScore {
    /// Position of the candidate in the input list; assigned by
    /// [`score_candidates`] / [`select_reference`] (0 for a bare pairwise call).
    pub view_index: usize,
    pub dist: f64,
    pub angle: f64,
    pub score: f64,
}

fn position(view: &CameraView, cfg: &SelectionConfig) -> nalgebra::Vector3<f64> {
    if cfg.use_camera_centers {
        view.extrinsics.camera_center()
    } else {
        *view.extrinsics.translation()
    }
}

fn axis(view: &CameraView, cfg: &SelectionConfig) -> nalgebra::Vector3<f64> {
    if cfg.world_viewing_axis {
        view.extrinsics.viewing_direction_world()
    } else {
        view.extrinsics.stored_z_column()
    }
}

fn score_from(dist: f64, angle: f64) -> f64 {
    1.0 / dist.max(DISTANCE_EPSILON) + (angle + 1.0) / 2.0
}

/// Pairwise overlap score between a target view and one input view.
pub fn overlap_score(tgt: &CameraView, input: &CameraView, cfg: &SelectionConfig) -> OverlapScore {
    let dist = (position(tgt, cfg) - position(input, cfg)).norm();
    // Optical axes have unit norm by construction (columns of a rotation),
    // so the cosine is a plain dot product.
    let angle = axis(tgt, cfg).dot(&axis(input, cfg));
    OverlapScore { view_index: 0, dist, angle, score: score_from(dist, angle) }
}

/// Scores for every candidate, in input order.
pub fn score_candidates(tgt: &CameraView, inputs: &[CameraView], cfg: &SelectionConfig) -> Vec<OverlapScore> {
    let mut scores: Vec<OverlapScore> = inputs
        .iter()
        .enumerate()
        .map(|(i, v)| OverlapScore { view_index: i, ..overlap_score(tgt, v, cfg) })
        .collect();
    if cfg.normalize_distances {
        let max_dist = scores.iter().map(|s| s.dist).fold(0.0f64, f64::max);
        if max_dist > 0.0 {
            for s in &mut scores {
                s.dist /= max_dist;
                s.score = score_from(s.dist, s.angle);
            }
        }
    }
    scores
}

/// Index of the highest-scoring input view plus its score; ties resolve to
/// the lowest index.
pub fn select_reference(
    tgt: &CameraView,
    inputs: &[CameraView],
    cfg: &SelectionConfig,
) -> Result<(usize, OverlapScore)> {
    let scores = score_candidates(tgt, inputs, cfg);
    let best = scores
        .into_iter()
        .max_by(|a, b| {
            // Strictly-greater comparison keeps the earliest maximum.
            a.score.partial_cmp(&b.score).unwrap_or(std::cmp::Ordering::Equal).then(
                b.view_index.cmp(&a.view_index),
            )
        })
        .ok_or(Error::EmptyInputSet)?;
    Ok((best.view_index, best))
}
