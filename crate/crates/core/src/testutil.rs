//! Shared helpers for the crate's unit tests. Compiled only under `cfg(test)`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::camera::{CameraExtrinsics, CameraIntrinsics, CameraView};

/// Proper rotation from a normalized quaternion sampled from a cube.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    loop {
        let q: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if n < 1e-3 {
            continue;
        }
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        return Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
    }
}

/// Random 640x480 view with a moderate focal range and bounded pose.
pub fn random_view(rng: &mut ChaCha8Rng) -> CameraView {
    let r = random_rotation(rng);
    let t = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let k = CameraIntrinsics::new(
        rng.gen_range(200.0..600.0),
        rng.gen_range(200.0..600.0),
        rng.gen_range(250.0..390.0),
        rng.gen_range(180.0..300.0),
        640,
        480,
    )
    .unwrap();
    CameraView::new(k, CameraExtrinsics::new(r, t).unwrap(), 0.01, 1e4).unwrap()
}

/// World point that lands inside both views' frames, found by rejection
/// sampling of back-projected pixels of `a`. Returns `None` when the frusta
/// barely overlap (callers should draw a fresh camera pair).
pub fn common_point(rng: &mut ChaCha8Rng, a: &CameraView, b: &CameraView) -> Option<Vector3<f64>> {
    for _ in 0..4000 {
        let x = rng.gen_range(0.0..a.intrinsics.width() as f64);
        let y = rng.gen_range(0.0..a.intrinsics.height() as f64);
        let depth = rng.gen_range(0.5..30.0);
        let world = a.backproject_pixel(x, y, depth);
        if let Some((bx, by, _)) = b.project_point(&world) {
            let in_frame = bx >= 0.0
                && bx <= b.intrinsics.width() as f64
                && by >= 0.0
                && by <= b.intrinsics.height() as f64;
            if in_frame {
                return Some(world);
            }
        }
    }
    None
}
