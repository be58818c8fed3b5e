//! Pinhole camera model: intrinsics, world-to-camera extrinsics, and the
//! combined view used throughout the pipeline.
//!
//! Extrinsics follow the `x_cam = R * x_world + T` convention, i.e. `[R|T]`
//! is the world-to-camera rigid transform. The camera center in world
//! coordinates is therefore `C = -R^T * T`.

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

/// Maximum deviation from orthonormality tolerated when validating a rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidCamera { reason: "non-finite intrinsics".into() });
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::InvalidCamera {
                reason: format!("focal lengths must be positive (fx {fx}, fy {fy})"),
            });
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera { reason: "zero image dimensions".into() });
        }
        if cx < 0.0 || cx >= width as f64 || cy < 0.0 || cy >= height as f64 {
            return Err(Error::InvalidCamera {
                reason: format!("principal point ({cx}, {cy}) outside {width}x{height} image"),
            });
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy, width, height })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Calibration matrix K.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Closed-form K^-1 (exact for an upper-triangular calibration matrix).
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraExtrinsics {
    /// Validates that `rotation` is a proper rotation: `R^T R = I` and
    /// `det R = 1`, both within [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let deviation = rotation_deviation(&rotation);
        if deviation > ROTATION_TOLERANCE {
            return Err(Error::InvalidCamera {
                reason: format!("rotation deviates from orthonormality by {deviation:e}"),
            });
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera { reason: "non-finite translation".into() });
        }
        Ok(CameraExtrinsics { rotation, translation })
    }

    pub fn identity() -> Self {
        CameraExtrinsics { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates, `C = -R^T * T`.
    pub fn camera_center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// World-space direction of the camera's +z (optical) axis: the third
    /// column of the camera-to-world rotation `R^T`.
    pub fn viewing_direction_world(&self) -> Vector3<f64> {
        self.rotation.transpose().column(2).into_owned()
    }

    /// Third column of the stored world-to-camera rotation. Kept for
    /// configurations that want the axis read straight off `R` instead of
    /// the world-space viewing direction.
    pub fn stored_z_column(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    /// Full 4x4 world-to-camera matrix.
    pub fn matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// World point -> camera coordinates.
    pub fn transform_point(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * world + self.translation
    }

    /// Camera point -> world coordinates.
    pub fn inverse_transform_point(&self, cam: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (cam - self.translation)
    }
}

/// Max-abs-entry deviation of `R^T R` from identity, combined with the
/// determinant error; 0 for an exact rotation.
pub fn rotation_deviation(rotation: &Matrix3<f64>) -> f64 {
    if !rotation.iter().all(|v| v.is_finite()) {
        return f64::INFINITY;
    }
    let gram = rotation.transpose() * rotation;
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev.max((rotation.determinant() - 1.0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraView {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
    near: f64,
    far: f64,
}

impl CameraView {
    pub fn new(intrinsics: CameraIntrinsics, extrinsics: CameraExtrinsics, near: f64, far: f64) -> Result<Self> {
        if !(near.is_finite() && far.is_finite()) || near <= 0.0 || far <= near {
            return Err(Error::InvalidCamera {
                reason: format!("depth planes must satisfy 0 < near < far (near {near}, far {far})"),
            });
        }
        Ok(CameraView { intrinsics, extrinsics, near, far })
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    /// Project a world point to pixel coordinates. Returns `(x, y, depth)`;
    /// `None` when the point is not strictly in front of the camera.
    pub fn project_point(&self, world: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let cam = self.extrinsics.transform_point(world);
        if cam.z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        let x = k.fx() * cam.x / cam.z + k.cx();
        let y = k.fy() * cam.y / cam.z + k.cy();
        Some((x, y, cam.z))
    }

    /// Back-project pixel `(x, y)` to the world point at camera-space depth
    /// `z = depth` (fronto-parallel convention).
    pub fn backproject_pixel(&self, x: f64, y: f64, depth: f64) -> Vector3<f64> {
        let k = &self.intrinsics;
        let cam = Vector3::new(
            depth * (x - k.cx()) / k.fx(),
            depth * (y - k.cy()) / k.fy(),
            depth,
        );
        self.extrinsics.inverse_transform_point(&cam)
    }
}
