//! CPU rasterization of projected Gaussians with front-to-back compositing.
//!
//! Primitives are projected, culled against the near plane, depth-sorted
//! (ties broken by input index so the pass is deterministic), and composited
//! per pixel. Pixel rows are independent and rendered in parallel; the
//! result is bit-identical regardless of thread count or input order (for
//! distinct depths).

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::CameraView;
use crate::grid::FeatureGrid;
use crate::splat::primitive::GaussianPrimitive;
use crate::splat::project::{project_covariance, SplatProjection, DEFAULT_DILATION};

/// Ceiling applied to every per-pixel effective alpha; keeps transmittance
/// strictly positive so compositing gradients stay finite.
pub const ALPHA_CLAMP: f64 = 0.999;

/// Default support truncation radius, in standard deviations.
pub const DEFAULT_SIGMA_CUTOFF: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    pub background: [f64; 3],
    /// SH truncation degree used for color evaluation (0..=3).
    pub sh_degree: usize,
    /// Isotropic covariance dilation in squared pixels; `None` disables it.
    pub dilation: Option<f64>,
    /// Splats are skipped beyond this many standard deviations from their
    /// center; `None` evaluates every splat at every pixel.
    pub sigma_cutoff: Option<f64>,
    /// Per-splat effective-alpha ceiling.
    pub alpha_clamp: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            background: [0.0; 3],
            sh_degree: 0,
            dilation: Some(DEFAULT_DILATION),
            sigma_cutoff: Some(DEFAULT_SIGMA_CUTOFF),
            alpha_clamp: ALPHA_CLAMP,
        }
    }
}

/// Rendered output: interleaved RGB in [0, 1] plus per-pixel accumulated
/// alpha (1 minus final transmittance) in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    rgb: Vec<f64>,
    alpha: Vec<f64>,
}

impl FrameBuffer {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[f64] {
        &self.rgb
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let b = (y * self.width + x) * 3;
        [self.rgb[b], self.rgb[b + 1], self.rgb[b + 2]]
    }

    pub fn accumulated_alpha(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.width + x]
    }

    /// View the color planes as a 3-channel feature grid (clones the buffer).
    pub fn to_grid(&self) -> FeatureGrid {
        FeatureGrid::from_vec(self.height, self.width, 3, self.rgb.clone())
            .expect("framebuffer dimensions are consistent")
    }
}

struct PreparedSplat {
    proj: SplatProjection,
    opacity: f64,
    /// Inverse covariance entries (a, b, c) of [[a, b], [b, c]].
    inv: (f64, f64, f64),
    /// Conservative pixel-space bounding box (x0, x1, y0, y1), inclusive.
    bbox: (f64, f64, f64, f64),
}

/// Rasterize `primitives` into `view`. Primitives behind the near plane are
/// culled; an empty input produces a pure background frame.
pub fn render_view(
    primitives: &[GaussianPrimitive],
    view: &CameraView,
    settings: &RenderSettings,
) -> Result<FrameBuffer> {
    let width = view.intrinsics.width() as usize;
    let height = view.intrinsics.height() as usize;

    let mut prepared: Vec<(usize, PreparedSplat)> = Vec::with_capacity(primitives.len());
    for (idx, prim) in primitives.iter().enumerate() {
        let proj = match project_covariance(prim, view, settings.dilation, settings.sh_degree) {
            Ok(p) => p,
            Err(crate::error::Error::BehindCamera { .. }) => continue,
            Err(e) => return Err(e),
        };
        let c = proj.cov2d;
        let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
        if det <= 0.0 || !det.is_finite() {
            continue; // numerically collapsed footprint
        }
        let inv = (c[(1, 1)] / det, -c[(0, 1)] / det, c[(0, 0)] / det);
        let bbox = match settings.sigma_cutoff {
            Some(k) => {
                // Extremal extent of the k-sigma ellipse along each axis.
                let ex = k * c[(0, 0)].sqrt();
                let ey = k * c[(1, 1)].sqrt();
                (proj.mean2d.x - ex, proj.mean2d.x + ex, proj.mean2d.y - ey, proj.mean2d.y + ey)
            }
            None => (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY),
        };
        prepared.push((idx, PreparedSplat { proj, opacity: prim.opacity(), inv, bbox }));
    }

    // Front-to-back order; index tie-break keeps the pass deterministic.
    prepared.sort_by(|(ia, a), (ib, b)| {
        a.proj.depth.total_cmp(&b.proj.depth).then_with(|| ia.cmp(ib))
    });
    let splats: Vec<&PreparedSplat> = prepared.iter().map(|(_, s)| s).collect();

    let cutoff_sq = settings.sigma_cutoff.map(|k| k * k);
    let mut rgb = vec![0.0f64; width * height * 3];
    let mut alpha = vec![0.0f64; width * height];

    rgb.par_chunks_mut(width * 3)
        .zip(alpha.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (rgb_row, alpha_row))| {
            let py = y as f64 + 0.5;
            for x in 0..width {
                let px = x as f64 + 0.5;
                let mut color = [0.0f64; 3];
                let mut transmittance = 1.0f64;
                for s in &splats {
                    if px < s.bbox.0 || px > s.bbox.1 || py < s.bbox.2 || py > s.bbox.3 {
                        continue;
                    }
                    let dx = px - s.proj.mean2d.x;
                    let dy = py - s.proj.mean2d.y;
                    let (ia, ib, ic) = s.inv;
                    let power = ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy;
                    if let Some(cut) = cutoff_sq {
                        if power > cut {
                            continue;
                        }
                    }
                    let gaussian = (-0.5 * power).exp();
                    let ea = (s.opacity * gaussian).min(settings.alpha_clamp);
                    let w = ea * transmittance;
                    color[0] += s.proj.color[0] * w;
                    color[1] += s.proj.color[1] * w;
                    color[2] += s.proj.color[2] * w;
                    transmittance *= 1.0 - ea;
                }
                let b = x * 3;
                rgb_row[b] = (color[0] + settings.background[0] * transmittance).clamp(0.0, 1.0);
                rgb_row[b + 1] = (color[1] + settings.background[1] * transmittance).clamp(0.0, 1.0);
                rgb_row[b + 2] = (color[2] + settings.background[2] * transmittance).clamp(0.0, 1.0);
                alpha_row[x] = 1.0 - transmittance;
            }
        });

    Ok(FrameBuffer { width, height, rgb, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::camera::{CameraExtrinsics, CameraIntrinsics};
    use crate::splat::gradients::{composite_pixel, PixelSplat};
    use approx::assert_relative_eq;
    use nalgebra::{Quaternion, Vector3};
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_view(width: u32, height: u32, f: f64) -> CameraView {
        let k = CameraIntrinsics::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height).unwrap();
        CameraView::new(k, CameraExtrinsics::identity(), 0.01, 1e3).unwrap()
    }

    fn dc_splat(at: Vector3<f64>, rgb: [f64; 3], sigma: f64, opacity: f64) -> GaussianPrimitive {
        GaussianPrimitive::from_dc_color(
            at,
            rgb,
            Quaternion::new(1.0, 0.0, 0.0, 0.0),
            Vector3::new(sigma, sigma, sigma),
            opacity,
        )
        .unwrap()
    }

    fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> Vec<GaussianPrimitive> {
        (0..n)
            .map(|_| {
                dc_splat(
                    Vector3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(2.0..8.0)),
                    [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)],
                    rng.gen_range(0.05..0.3),
                    rng.gen_range(0.2..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn empty_scene_renders_background() {
        let view = small_view(8, 6, 10.0);
        let settings = RenderSettings { background: [0.1, 0.2, 0.3], ..RenderSettings::default() };
        let fb = render_view(&[], &view, &settings).unwrap();
        for y in 0..6 {
            for x in 0..8 {
                assert_eq!(fb.pixel(x, y), [0.1, 0.2, 0.3]);
                assert_eq!(fb.accumulated_alpha(x, y), 0.0);
            }
        }
    }

    #[test]
    fn opaque_centered_primitive_paints_its_dc_color() {
        // 9x9 frame; the splat center lands exactly on the middle pixel
        // center (4.5, 4.5).
        let view = small_view(9, 9, 20.0);
        let rgb = [0.8, 0.3, 0.6];
        let prim = dc_splat(Vector3::new(0.0, 0.0, 5.0), rgb, 0.5, 1.0);
        let fb = render_view(&[prim], &view, &RenderSettings::default()).unwrap();
        let got = fb.pixel(4, 4);
        // The alpha ceiling leaves a 1e-3 transmittance sliver for the
        // (black) background.
        for ch in 0..3 {
            assert_relative_eq!(got[ch], rgb[ch], epsilon = 2e-3);
            assert_relative_eq!(got[ch], rgb[ch] * ALPHA_CLAMP, epsilon = 1e-12);
        }
        assert_relative_eq!(fb.accumulated_alpha(4, 4), ALPHA_CLAMP, epsilon = 1e-12);
    }

    #[test]
    fn two_overlapping_splats_match_scalar_compositing_oracle() {
        let view = small_view(16, 16, 30.0);
        let front = dc_splat(Vector3::new(0.05, 0.0, 4.0), [0.9, 0.2, 0.1], 0.3, 0.7);
        let back = dc_splat(Vector3::new(-0.05, 0.02, 6.0), [0.1, 0.4, 0.8], 0.4, 0.6);
        let settings = RenderSettings {
            background: [0.25, 0.25, 0.25],
            sigma_cutoff: None, // exact footprint for the hand evaluation
            ..RenderSettings::default()
        };
        let fb = render_view(&[back.clone(), front.clone()], &view, &settings).unwrap();

        // Scalar hand-evaluation at a few probe pixels, reusing only the
        // projection outputs.
        let pf = project_covariance(&front, &view, settings.dilation, 0).unwrap();
        let pb = project_covariance(&back, &view, settings.dilation, 0).unwrap();
        assert!(pf.depth < pb.depth);
        for (x, y) in [(8usize, 8usize), (7, 9), (9, 7), (2, 2)] {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut stack = Vec::new();
            for p in [&pf, &pb] {
                let dx = px - p.mean2d.x;
                let dy = py - p.mean2d.y;
                let det = p.cov2d[(0, 0)] * p.cov2d[(1, 1)] - p.cov2d[(0, 1)] * p.cov2d[(1, 0)];
                let q = (p.cov2d[(1, 1)] * dx * dx - 2.0 * p.cov2d[(0, 1)] * dx * dy
                    + p.cov2d[(0, 0)] * dy * dy)
                    / det;
                let opacity = if std::ptr::eq(p, &pf) { 0.7 } else { 0.6 };
                stack.push(PixelSplat { color: p.color, opacity, weight: (-0.5 * q).exp() });
            }
            let (expected, _) = composite_pixel(&stack, settings.background);
            let got = fb.pixel(x, y);
            for ch in 0..3 {
                assert_relative_eq!(got[ch], expected[ch], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn shuffled_input_renders_bit_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let view = small_view(24, 18, 25.0);
        for _ in 0..10 {
            let scene = random_scene(&mut rng, 30);
            let mut shuffled = scene.clone();
            shuffled.shuffle(&mut rng);
            let a = render_view(&scene, &view, &RenderSettings::default()).unwrap();
            let b = render_view(&shuffled, &view, &RenderSettings::default()).unwrap();
            assert!(a.rgb() == b.rgb() && a.alpha() == b.alpha(), "permuted input changed the frame");
        }
    }

    #[test]
    fn opaque_stack_extinguishes_the_background() {
        let view = small_view(9, 9, 20.0);
        let prims: Vec<GaussianPrimitive> = (0..5)
            .map(|i| dc_splat(Vector3::new(0.0, 0.0, 3.0 + i as f64), [1.0, 1.0, 1.0], 1.0, 1.0))
            .collect();
        let settings = RenderSettings { background: [1.0, 0.0, 0.0], ..RenderSettings::default() };
        let fb = render_view(&prims, &view, &settings).unwrap();
        assert!(fb.accumulated_alpha(4, 4) > 1.0 - 1e-6, "stack of opaque splats must saturate alpha");
    }

    #[test]
    fn behind_camera_primitives_are_culled_not_fatal() {
        let view = small_view(8, 8, 10.0);
        let visible = dc_splat(Vector3::new(0.0, 0.0, 4.0), [0.5, 0.5, 0.5], 0.5, 1.0);
        let behind = dc_splat(Vector3::new(0.0, 0.0, -4.0), [1.0, 0.0, 0.0], 0.5, 1.0);
        let with = render_view(&[visible.clone(), behind], &view, &RenderSettings::default()).unwrap();
        let without = render_view(&[visible], &view, &RenderSettings::default()).unwrap();
        assert_eq!(with.rgb(), without.rgb());
    }

    #[test]
    fn equal_depth_ties_resolve_by_input_index() {
        // Two coincident splats at the same depth: the pass must stay
        // deterministic run to run.
        let view = small_view(9, 9, 20.0);
        let a = dc_splat(Vector3::new(0.0, 0.0, 5.0), [1.0, 0.0, 0.0], 0.5, 0.6);
        let b = dc_splat(Vector3::new(0.0, 0.0, 5.0), [0.0, 0.0, 1.0], 0.5, 0.6);
        let fb1 = render_view(&[a.clone(), b.clone()], &view, &RenderSettings::default()).unwrap();
        let fb2 = render_view(&[a, b], &view, &RenderSettings::default()).unwrap();
        assert_eq!(fb1.rgb(), fb2.rgb());
        // First-listed splat composites first: red dominates.
        let px = fb1.pixel(4, 4);
        assert!(px[0] > px[2]);
    }
}
