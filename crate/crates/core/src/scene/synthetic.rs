//! Deterministic synthetic scene generation.
//!
//! Builds a small in-memory scene — cameras on an arc looking at the origin,
//! a seeded cloud of Gaussian primitives — renders ground-truth images for
//! every view, and writes the whole thing to disk as a manifest, pose file,
//! primitive file, and PNG images. The same configuration and seed always
//! produce byte-identical files.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Quaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{CameraExtrinsics, CameraIntrinsics, CameraView};
use crate::splat::{render_view, GaussianPrimitive, RenderSettings};

use super::image_io::save_image;
use super::manifest::ManifestDoc;
use super::pose::{serialize_pose_file, PoseRecord};
use super::primitives::save_primitives;

#[derive(Debug, Clone, Copy)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Total views; every other view (starting at 0) is an input, the rest
    /// are targets, with the split adjusted so at least two inputs exist.
    pub view_count: usize,
    pub primitive_count: usize,
    /// Camera ring radius, world units.
    pub radius: f64,
    /// Total angular spread of the camera arc, radians.
    pub arc: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            width: 64,
            height: 48,
            view_count: 3,
            primitive_count: 40,
            radius: 4.0,
            arc: 1.0,
        }
    }
}

/// World-to-camera extrinsics for a camera at `center` looking at `at`.
pub fn look_at_extrinsics(center: Vector3<f64>, at: Vector3<f64>) -> Result<CameraExtrinsics> {
    let forward = (at - center).normalize();
    let up = Vector3::new(0.0, 1.0, 0.0);
    let right = up.cross(&forward);
    if right.norm() < 1e-9 {
        return Err(Error::InvalidCamera {
            reason: "viewing direction parallel to the up axis".to_string(),
        });
    }
    let right = right.normalize();
    let y_axis = forward.cross(&right); // completes a right-handed row basis
    let rotation =
        Matrix3::from_rows(&[right.transpose(), y_axis.transpose(), forward.transpose()]);
    let translation = -rotation * center;
    CameraExtrinsics::new(rotation, translation)
}

/// Cameras on an arc in the x–z plane (with a slight deterministic height
/// wobble), all looking at the origin.
pub fn arc_cameras(cfg: &SyntheticConfig) -> Result<Vec<CameraView>> {
    let n = cfg.view_count;
    let fx = 0.9 * cfg.width as f64;
    let intrinsics = CameraIntrinsics::new(
        fx,
        fx,
        cfg.width as f64 / 2.0,
        cfg.height as f64 / 2.0,
        cfg.width,
        cfg.height,
    )?;
    (0..n)
        .map(|k| {
            let t = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
            let theta = (t - 0.5) * cfg.arc;
            let center = Vector3::new(
                cfg.radius * theta.sin(),
                0.12 * cfg.radius * (3.0 * theta + 0.7).sin(),
                -cfg.radius * theta.cos(),
            );
            let extrinsics = look_at_extrinsics(center, Vector3::zeros())?;
            CameraView::new(intrinsics.clone(), extrinsics, 0.1, 100.0)
        })
        .collect()
}

/// Seeded primitive cloud around the origin.
pub fn synthetic_primitives(seed: u64, count: usize) -> Vec<GaussianPrimitive> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mean = Vector3::new(
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
            );
            let rgb = [
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..0.95),
            ];
            let q = Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let q = q / q.norm();
            let scale = Vector3::new(
                rng.gen_range(0.08..0.25),
                rng.gen_range(0.08..0.25),
                rng.gen_range(0.08..0.25),
            );
            let opacity = rng.gen_range(0.4..0.95);
            GaussianPrimitive::from_dc_color(mean, rgb, q, scale, opacity)
                .expect("sampled parameters satisfy the primitive invariants")
        })
        .collect()
}

fn split_indices(view_count: usize) -> (Vec<usize>, Vec<usize>) {
    // Even positions are inputs, odd are targets; degenerate small counts
    // fall back to making the first two views inputs.
    if view_count < 4 {
        let inputs: Vec<usize> = match view_count {
            0 | 1 => vec![],
            2 => vec![0, 1],
            _ => vec![0, 2],
        };
        let targets = (0..view_count).filter(|i| !inputs.contains(i)).collect();
        return (inputs, targets);
    }
    let inputs: Vec<usize> = (0..view_count).step_by(2).collect();
    let targets: Vec<usize> = (1..view_count).step_by(2).collect();
    (inputs, targets)
}

/// Generate a scene under `dir` and return the manifest path. `dir` must
/// already exist.
pub fn generate_scene(dir: &Path, cfg: &SyntheticConfig) -> Result<PathBuf> {
    if cfg.view_count < 3 {
        return Err(Error::InvalidIndices {
            reason: format!("synthetic scenes need at least 3 views, got {}", cfg.view_count),
        });
    }
    let cameras = arc_cameras(cfg)?;
    let primitives = synthetic_primitives(cfg.seed, cfg.primitive_count);
    let settings = RenderSettings::default();

    let mut image_names = Vec::with_capacity(cameras.len());
    for (k, camera) in cameras.iter().enumerate() {
        let frame = render_view(&primitives, camera, &settings)?;
        let name = format!("view_{k:04}.png");
        save_image(&frame.to_grid(), &dir.join(&name))?;
        image_names.push(name);
    }

    let records: Vec<PoseRecord> = cameras
        .iter()
        .enumerate()
        .map(|(k, camera)| PoseRecord::from_view(camera, k as f64))
        .collect();
    let pose_path = dir.join("poses.txt");
    std::fs::write(&pose_path, serialize_pose_file(&records, Some("# synthetic arc scene")))
        .map_err(|e| Error::io(&pose_path, e))?;

    save_primitives(&primitives, &dir.join("primitives.json"))?;

    let (input_indices, target_indices) = split_indices(cfg.view_count);
    let doc = ManifestDoc {
        scene_id: format!("synthetic-{:016x}", cfg.seed),
        width: cfg.width,
        height: cfg.height,
        near: 0.1,
        far: 100.0,
        pose_file: "poses.txt".to_string(),
        images: image_names,
        input_indices,
        target_indices,
        primitives: Some("primitives.json".to_string()),
    };
    let manifest_path = dir.join("manifest.json");
    doc.save(&manifest_path)?;
    Ok(manifest_path)
}
