//! Dataset curation: pick a handful of target views per scene and pair each
//! with its best-overlapping input view.
//!
//! Target count policy: aim for 5 to 7 views — `min(7, max(5, available))`
//! — clipped (and flagged) when the scene has fewer. The chosen targets are
//! spread uniformly over the sorted target list, which is deterministic for
//! a given scene.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::CameraView;
use crate::select::{select_reference, SelectionConfig};

use super::manifest::SceneManifest;

/// One curated target/reference pairing with its artifact paths.
#[derive(Debug, Clone)]
pub struct CuratedPair {
    /// Index into the scene's view list.
    pub target_index: usize,
    /// Index into the scene's view list (always one of `input_indices`).
    pub reference_index: usize,
    /// Where the rendered target image is expected/emitted.
    pub rendered_path: PathBuf,
    /// The scene's ground-truth image for the target.
    pub ground_truth_path: PathBuf,
    pub target_camera: CameraView,
    pub reference_camera: CameraView,
}

#[derive(Debug, Clone)]
pub struct CurationResult {
    pub pairs: Vec<CuratedPair>,
    /// True when the scene had fewer than five targets, so the count policy
    /// could not be met.
    pub below_range: bool,
}

/// Positions of `count` uniformly-spread picks from a list of `available`
/// items (both endpoints included for `count >= 2`).
fn uniform_positions(available: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![0];
    }
    (0..count)
        .map(|k| ((k as f64) * ((available - 1) as f64) / ((count - 1) as f64)).round() as usize)
        .collect()
}

/// Select curated pairs. Rendered images are expected under `rendered_dir`
/// with the scene's `view_{index:04}.png` naming; this function only builds
/// the records — rendering (and checking the files exist) is the caller's
/// business.
pub fn curate_pairs(
    scene: &SceneManifest,
    rendered_dir: &Path,
    selection: &SelectionConfig,
) -> Result<CurationResult> {
    if scene.target_indices.is_empty() {
        return Err(Error::NoTargets);
    }
    let mut targets = scene.target_indices.clone();
    targets.sort_unstable();
    let available = targets.len();
    let desired = available.clamp(5, 7);
    let (count, below_range) =
        if desired > available { (available, true) } else { (desired, false) };

    let input_cameras = scene.input_cameras();
    let mut pairs = Vec::with_capacity(count);
    for pos in uniform_positions(available, count) {
        let target_index = targets[pos];
        let target = &scene.views[target_index];
        let (winner, _) = select_reference(&target.camera, &input_cameras, selection)?;
        let reference_index = scene.input_indices[winner];
        pairs.push(CuratedPair {
            target_index,
            reference_index,
            rendered_path: rendered_dir.join(format!("view_{target_index:04}.png")),
            ground_truth_path: target.image_path.clone(),
            target_camera: target.camera.clone(),
            reference_camera: scene.views[reference_index].camera.clone(),
        });
    }
    Ok(CurationResult { pairs, below_range })
}
