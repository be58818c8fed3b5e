//! Anisotropic 3D Gaussian primitives with spherical-harmonics color.
//!
//! A primitive carries a mean, an orientation quaternion `q`, per-axis scales
//! `s` (standard deviations), an opacity, and SH coefficients for view
//! dependent color. Its world covariance factorizes as
//! `Sigma = R S S^T R^T` with `R` the rotation of `q` and `S = diag(s)`.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Real SH basis constants (degree 0..3), graphics convention.
pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
pub const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Highest supported SH degree.
pub const MAX_SH_DEGREE: usize = 3;

/// Quaternion norm tolerance at construction.
pub const QUATERNION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    mean: Vector3<f64>,
    /// Coefficient-major RGB triplets: `sh[k * 3 + channel]`, `(degree+1)^2`
    /// coefficients per channel.
    sh: Vec<f64>,
    rotation: UnitQuaternion<f64>,
    scale: Vector3<f64>,
    opacity: f64,
}

impl GaussianPrimitive {
    pub fn new(
        mean: Vector3<f64>,
        sh: Vec<f64>,
        rotation: Quaternion<f64>,
        scale: Vector3<f64>,
        opacity: f64,
    ) -> Result<Self> {
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPrimitive { reason: "non-finite mean".into() });
        }
        let coeffs = sh.len() / 3;
        let degree_ok = sh.len() % 3 == 0
            && matches!(coeffs, 1 | 4 | 9 | 16)
            && sh.iter().all(|v| v.is_finite());
        if !degree_ok {
            return Err(Error::InvalidPrimitive {
                reason: format!("sh length {} is not 3*(d+1)^2 for d in 0..=3", sh.len()),
            });
        }
        if (rotation.norm() - 1.0).abs() > QUATERNION_TOLERANCE {
            return Err(Error::InvalidPrimitive {
                reason: format!("quaternion norm {} deviates from 1", rotation.norm()),
            });
        }
        if !(scale.iter().all(|v| v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidPrimitive { reason: "scales must be strictly positive".into() });
        }
        if !(0.0..=1.0).contains(&opacity) {
            return Err(Error::InvalidPrimitive { reason: format!("opacity {opacity} outside [0, 1]") });
        }
        Ok(GaussianPrimitive {
            mean,
            sh,
            rotation: UnitQuaternion::new_normalize(rotation),
            scale,
            opacity,
        })
    }

    /// Degree-0 primitive whose rendered color is exactly `rgb` (the DC
    /// coefficient inverts the basis constant and the +0.5 shift).
    pub fn from_dc_color(
        mean: Vector3<f64>,
        rgb: [f64; 3],
        rotation: Quaternion<f64>,
        scale: Vector3<f64>,
        opacity: f64,
    ) -> Result<Self> {
        let sh = vec![
            (rgb[0] - 0.5) / SH_C0,
            (rgb[1] - 0.5) / SH_C0,
            (rgb[2] - 0.5) / SH_C0,
        ];
        GaussianPrimitive::new(mean, sh, rotation, scale, opacity)
    }

    pub fn mean(&self) -> &Vector3<f64> {
        &self.mean
    }

    pub fn sh(&self) -> &[f64] {
        &self.sh
    }

    pub fn sh_degree(&self) -> usize {
        match self.sh.len() / 3 {
            1 => 0,
            4 => 1,
            9 => 2,
            _ => 3,
        }
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn scale(&self) -> &Vector3<f64> {
        &self.scale
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    /// World-space covariance `R diag(s^2) R^T`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation.to_rotation_matrix();
        let s2 = Matrix3::from_diagonal(&self.scale.map(|v| v * v));
        r * s2 * r.transpose()
    }

    /// Evaluate this primitive's SH color along `dir` (unit view direction),
    /// truncated at `min(degree, self.sh_degree())`; includes the +0.5 shift
    /// and clamps to [0, 1].
    pub fn color_along(&self, dir: &Vector3<f64>, degree: usize) -> [f64; 3] {
        let degree = degree.min(self.sh_degree());
        let raw = eval_sh(degree, &self.sh, dir);
        [
            (raw[0] + 0.5).clamp(0.0, 1.0),
            (raw[1] + 0.5).clamp(0.0, 1.0),
            (raw[2] + 0.5).clamp(0.0, 1.0),
        ]
    }
}

/// Raw SH basis dot product per channel (no offset, no clamping).
/// `sh` is coefficient-major; only the first `(degree+1)^2` coefficients are read.
pub fn eval_sh(degree: usize, sh: &[f64], dir: &Vector3<f64>) -> [f64; 3] {
    assert!(degree <= MAX_SH_DEGREE);
    assert!(sh.len() >= 3 * (degree + 1) * (degree + 1));
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let c = |k: usize, ch: usize| sh[k * 3 + ch];

    let mut out = [0.0; 3];
    for (ch, o) in out.iter_mut().enumerate() {
        let mut v = SH_C0 * c(0, ch);
        if degree >= 1 {
            v += -SH_C1 * y * c(1, ch) + SH_C1 * z * c(2, ch) - SH_C1 * x * c(3, ch);
        }
        if degree >= 2 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            v += SH_C2[0] * x * y * c(4, ch)
                + SH_C2[1] * y * z * c(5, ch)
                + SH_C2[2] * (2.0 * zz - xx - yy) * c(6, ch)
                + SH_C2[3] * x * z * c(7, ch)
                + SH_C2[4] * (xx - yy) * c(8, ch);
        }
        if degree >= 3 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            v += SH_C3[0] * y * (3.0 * xx - yy) * c(9, ch)
                + SH_C3[1] * x * y * z * c(10, ch)
                + SH_C3[2] * y * (4.0 * zz - xx - yy) * c(11, ch)
                + SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * c(12, ch)
                + SH_C3[4] * x * (4.0 * zz - xx - yy) * c(13, ch)
                + SH_C3[5] * z * (xx - yy) * c(14, ch)
                + SH_C3[6] * x * (xx - 3.0 * yy) * c(15, ch);
        }
        *o = v;
    }
    out
}
