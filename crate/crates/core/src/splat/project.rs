//! Perspective projection of 3D Gaussians to screen-space 2D Gaussians.
//!
//! The world covariance is first rotated into camera space with the view
//! rotation `W`, then flattened through the local affine approximation of the
//! perspective map (Jacobian `J`):
//!
//! ```text
//! Sigma' = J W Sigma W^T J^T
//! ```
//!
//! An optional isotropic dilation is added to the projected covariance
//! diagonal; it acts as a small anti-aliasing floor on the splat footprint.

use nalgebra::{Matrix2, Matrix2x3, Vector2};

use crate::error::{Error, Result};
use crate::geometry::CameraView;
use crate::splat::primitive::GaussianPrimitive;

/// Default dilation added to both cov2d diagonal entries, in squared pixels.
pub const DEFAULT_DILATION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SplatProjection {
    /// Pixel-space mean.
    pub mean2d: Vector2<f64>,
    /// Symmetric positive-definite 2x2 pixel-space covariance
    /// (dilation included when requested).
    pub cov2d: Matrix2<f64>,
    /// Camera-space depth of the mean.
    pub depth: f64,
    /// RGB color in [0, 1], evaluated from SH along the viewing direction.
    pub color: [f64; 3],
}

/// Project one primitive into a view. `dilation` is added to the covariance
/// diagonal when present; `sh_degree` truncates the color evaluation.
pub fn project_covariance(
    prim: &GaussianPrimitive,
    view: &CameraView,
    dilation: Option<f64>,
    sh_degree: usize,
) -> Result<SplatProjection> {
    let cam = view.extrinsics.transform_point(prim.mean());
    if cam.z <= view.near() {
        return Err(Error::BehindCamera { depth: cam.z, near: view.near() });
    }

    let k = &view.intrinsics;
    let (fx, fy) = (k.fx(), k.fy());
    let z_inv = 1.0 / cam.z;
    let mean2d = Vector2::new(fx * cam.x * z_inv + k.cx(), fy * cam.y * z_inv + k.cy());

    // Jacobian of (x, y, z) -> (fx x / z + cx, fy y / z + cy) at the mean.
    let j = Matrix2x3::new(
        fx * z_inv,
        0.0,
        -fx * cam.x * z_inv * z_inv,
        0.0,
        fy * z_inv,
        -fy * cam.y * z_inv * z_inv,
    );
    let w = view.extrinsics.rotation();
    let cov_cam = w * prim.covariance() * w.transpose();
    let mut cov2d = j * cov_cam * j.transpose();
    // Symmetrize to scrub rounding asymmetry from the triple product.
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;
    if let Some(eps) = dilation {
        cov2d[(0, 0)] += eps;
        cov2d[(1, 1)] += eps;
    }

    let dir = (prim.mean() - view.extrinsics.camera_center()).normalize();
    let color = prim.color_along(&dir, sh_degree);

    Ok(SplatProjection { mean2d, cov2d, depth: cam.z, color })
}
