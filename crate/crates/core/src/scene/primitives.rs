//! JSON (de)serialization of Gaussian primitive sets.
//!
//! The file is a single object with a `primitives` array; each entry stores
//! the world mean, spherical-harmonics coefficients (coefficient-major RGB
//! triplets), a `[w, x, y, z]` unit quaternion, per-axis scales, and
//! opacity. Floats use shortest round-trip formatting, so save → load is
//! value-exact.

use std::path::Path;

use nalgebra::{Quaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::splat::GaussianPrimitive;

#[derive(Debug, Serialize, Deserialize)]
struct PrimitiveRecord {
    mean: [f64; 3],
    sh: Vec<f64>,
    rotation_wxyz: [f64; 4],
    scale: [f64; 3],
    opacity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrimitiveFile {
    primitives: Vec<PrimitiveRecord>,
}

pub fn save_primitives(primitives: &[GaussianPrimitive], path: &Path) -> Result<()> {
    let records = primitives
        .iter()
        .map(|p| {
            let q = p.rotation().quaternion();
            PrimitiveRecord {
                mean: [p.mean().x, p.mean().y, p.mean().z],
                sh: p.sh().to_vec(),
                rotation_wxyz: [q.w, q.i, q.j, q.k],
                scale: [p.scale().x, p.scale().y, p.scale().z],
                opacity: p.opacity(),
            }
        })
        .collect();
    let text = serde_json::to_string_pretty(&PrimitiveFile { primitives: records })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Load and re-validate a primitive set. An empty array is allowed (renders
/// to pure background).
pub fn load_primitives(path: &Path) -> Result<Vec<GaussianPrimitive>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PrimitiveFile = serde_json::from_str(&text)?;
    file.primitives
        .iter()
        .map(|r| {
            GaussianPrimitive::new(
                Vector3::new(r.mean[0], r.mean[1], r.mean[2]),
                r.sh.clone(),
                Quaternion::new(
                    r.rotation_wxyz[0],
                    r.rotation_wxyz[1],
                    r.rotation_wxyz[2],
                    r.rotation_wxyz[3],
                ),
                Vector3::new(r.scale[0], r.scale[1], r.scale[2]),
                r.opacity,
            )
        })
        .collect()
}
