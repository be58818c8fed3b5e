//! Scene manifests: a JSON document tying together a pose file, image
//! files, and the input/target view split.
//!
//! On-disk schema (paths relative to the manifest's directory):
//!
//! ```json
//! {
//!   "scene_id": "triplet",
//!   "width": 64, "height": 48,
//!   "near": 0.1, "far": 100.0,
//!   "pose_file": "poses.txt",
//!   "images": ["view_0000.png", "view_0001.png", "view_0002.png"],
//!   "input_indices": [0, 2],
//!   "target_indices": [1],
//!   "primitives": "primitives.json"
//! }
//! ```
//!
//! `primitives` is optional. Loading fully validates the scene: every
//! referenced file must exist, the pose count must match the image count,
//! cameras must pass their own invariants, and the index sets must be
//! in-range, duplicate-free, disjoint, with at least two input views.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraView;

use super::pose::{parse_pose_file, PoseRecord};

/// The raw JSON document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestDoc {
    pub scene_id: String,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
    pub pose_file: String,
    pub images: Vec<String>,
    pub input_indices: Vec<usize>,
    pub target_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitives: Option<String>,
}

impl ManifestDoc {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One fully-resolved view of a loaded scene.
#[derive(Debug, Clone)]
pub struct SceneView {
    /// Absolute path of the ground-truth image.
    pub image_path: PathBuf,
    pub camera: CameraView,
    pub timestamp: f64,
}

/// A validated, loaded scene.
#[derive(Debug, Clone)]
pub struct SceneManifest {
    pub scene_id: String,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
    pub views: Vec<SceneView>,
    pub input_indices: Vec<usize>,
    pub target_indices: Vec<usize>,
    /// Absolute path of the primitive file, when the manifest names one.
    pub primitives_path: Option<PathBuf>,
}

impl SceneManifest {
    /// Cameras of the input views, in `input_indices` order.
    pub fn input_cameras(&self) -> Vec<CameraView> {
        self.input_indices.iter().map(|&i| self.views[i].camera.clone()).collect()
    }
}

fn check_exists(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    Ok(())
}

fn validate_indices(doc: &ManifestDoc, view_count: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for (name, set) in [("input", &doc.input_indices), ("target", &doc.target_indices)] {
        for &i in set {
            if i >= view_count {
                return Err(Error::InvalidIndices {
                    reason: format!("{name} index {i} out of range for {view_count} views"),
                });
            }
            if !seen.insert(i) {
                return Err(Error::InvalidIndices {
                    reason: format!("index {i} appears more than once across the index sets"),
                });
            }
        }
    }
    if doc.input_indices.len() < 2 {
        return Err(Error::InvalidIndices {
            reason: format!("need at least 2 input views, got {}", doc.input_indices.len()),
        });
    }
    Ok(())
}

/// Load and validate a scene from its manifest path.
pub fn load_scene_manifest(path: &Path) -> Result<SceneManifest> {
    check_exists(path)?;
    let doc = ManifestDoc::load(path)?;
    let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let pose_path = root.join(&doc.pose_file);
    check_exists(&pose_path)?;
    let pose_text = std::fs::read_to_string(&pose_path).map_err(|e| Error::io(&pose_path, e))?;
    let records = parse_pose_file(&pose_text)?;
    if records.len() != doc.images.len() {
        return Err(Error::InvalidIndices {
            reason: format!(
                "manifest lists {} images but the pose file has {} records",
                doc.images.len(),
                records.len()
            ),
        });
    }
    validate_indices(&doc, records.len())?;

    let mut views = Vec::with_capacity(records.len());
    for (record, image) in records.iter().zip(&doc.images) {
        let image_path = root.join(image);
        check_exists(&image_path)?;
        views.push(SceneView {
            image_path,
            camera: record.to_view(doc.width, doc.height, doc.near, doc.far)?,
            timestamp: record.timestamp,
        });
    }

    let primitives_path = match &doc.primitives {
        Some(rel) => {
            let p = root.join(rel);
            check_exists(&p)?;
            Some(p)
        }
        None => None,
    };

    Ok(SceneManifest {
        scene_id: doc.scene_id,
        width: doc.width,
        height: doc.height,
        near: doc.near,
        far: doc.far,
        views,
        input_indices: doc.input_indices,
        target_indices: doc.target_indices,
        primitives_path,
    })
}

/// Rebuild the on-disk document for a loaded scene (paths relative to the
/// intended manifest directory, using the image file names).
pub fn manifest_to_doc(scene: &SceneManifest) -> ManifestDoc {
    ManifestDoc {
        scene_id: scene.scene_id.clone(),
        width: scene.width,
        height: scene.height,
        near: scene.near,
        far: scene.far,
        pose_file: "poses.txt".to_string(),
        images: scene
            .views
            .iter()
            .map(|v| {
                v.image_path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect(),
        input_indices: scene.input_indices.clone(),
        target_indices: scene.target_indices.clone(),
        primitives: scene
            .primitives_path
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned()),
    }
}

/// Convenience wrapper: [`PoseRecord`]s of every view, in order.
pub fn scene_pose_records(scene: &SceneManifest) -> Vec<PoseRecord> {
    scene
        .views
        .iter()
        .map(|v| PoseRecord::from_view(&v.camera, v.timestamp))
        .collect()
}
