//! Image quality metrics over feature grids.
//!
//! Both metrics accept an optional single-channel mask grid; a pixel is
//! included when its mask value exceeds 0.5.

use crate::error::{Error, Result};
use crate::grid::FeatureGrid;

/// Structural-similarity window side length.
pub const SSIM_WINDOW: usize = 11;
/// Gaussian sigma for the structural-similarity window.
pub const SSIM_SIGMA: f64 = 1.5;

fn check_pair(a: &FeatureGrid, b: &FeatureGrid) -> Result<()> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::ShapeMismatch {
            context: "metric image pair",
            expected: format!("{}x{}x{}", a.height(), a.width(), a.channels()),
            actual: format!("{}x{}x{}", b.height(), b.width(), b.channels()),
        });
    }
    Ok(())
}

fn check_mask(image: &FeatureGrid, mask: &FeatureGrid) -> Result<()> {
    if mask.dims() != image.dims() || mask.channels() != 1 {
        return Err(Error::ShapeMismatch {
            context: "metric mask",
            expected: format!("{}x{}x1", image.height(), image.width()),
            actual: format!("{}x{}x{}", mask.height(), mask.width(), mask.channels()),
        });
    }
    Ok(())
}

fn mask_includes(mask: Option<&FeatureGrid>, i: usize, j: usize) -> bool {
    mask.map_or(true, |m| m.get(i, j)[0] > 0.5)
}

/// Mean squared error over all channels of all (mask-included) pixels.
pub fn mean_squared_error(
    a: &FeatureGrid,
    b: &FeatureGrid,
    mask: Option<&FeatureGrid>,
) -> Result<f64> {
    check_pair(a, b)?;
    if let Some(m) = mask {
        check_mask(a, m)?;
    }
    let c = a.channels();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..a.height() {
        for j in 0..a.width() {
            if !mask_includes(mask, i, j) {
                continue;
            }
            let (pa, pb) = (a.get(i, j), b.get(i, j));
            for ch in 0..c {
                let d = pa[ch] - pb[ch];
                sum += d * d;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyInputSet);
    }
    Ok(sum / (count * c) as f64)
}

/// Peak signal-to-noise ratio in decibels: `10 log10(max^2 / MSE)`.
/// Identical inputs have zero error and return `f64::INFINITY`.
pub fn psnr(
    a: &FeatureGrid,
    b: &FeatureGrid,
    max_value: f64,
    mask: Option<&FeatureGrid>,
) -> Result<f64> {
    let mse = mean_squared_error(a, b, mask)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_value * max_value / mse).log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for i in 0..SSIM_WINDOW {
        for j in 0..SSIM_WINDOW {
            let (dy, dx) = (i as f64 - half, j as f64 - half);
            let v = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[i * SSIM_WINDOW + j] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean structural similarity over all fully-interior windows, averaged
/// across channels. No padding is used: window centers keep a 5-pixel margin,
/// so inputs must be at least 11x11 (`ImageTooSmall` otherwise). A mask
/// restricts which window centers contribute; the windows themselves always
/// read the full image.
pub fn ssim(
    a: &FeatureGrid,
    b: &FeatureGrid,
    max_value: f64,
    mask: Option<&FeatureGrid>,
) -> Result<f64> {
    check_pair(a, b)?;
    if let Some(m) = mask {
        check_mask(a, m)?;
    }
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { width: w, height: h, side: SSIM_WINDOW });
    }
    let c1 = (0.01 * max_value) * (0.01 * max_value);
    let c2 = (0.03 * max_value) * (0.03 * max_value);
    let window = gaussian_window();
    let half = SSIM_WINDOW / 2;
    let channels = a.channels();

    let mut total = 0.0;
    let mut count = 0usize;
    for ci in half..h - half {
        for cj in half..w - half {
            if !mask_includes(mask, ci, cj) {
                continue;
            }
            for ch in 0..channels {
                let (mut mx, mut my) = (0.0, 0.0);
                let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
                for wi in 0..SSIM_WINDOW {
                    for wj in 0..SSIM_WINDOW {
                        let wv = window[wi * SSIM_WINDOW + wj];
                        let x = a.get(ci + wi - half, cj + wj - half)[ch];
                        let y = b.get(ci + wi - half, cj + wj - half)[ch];
                        mx += wv * x;
                        my += wv * y;
                        sxx += wv * x * x;
                        syy += wv * y * y;
                        sxy += wv * x * y;
                    }
                }
                let (vx, vy) = (sxx - mx * mx, syy - my * my);
                let cov = sxy - mx * my;
                let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
                let den = (mx * mx + my * my + c1) * (vx + vy + c2);
                total += num / den;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyInputSet);
    }
    Ok(total / (count * channels) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, h: usize, w: usize, c: usize) -> FeatureGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureGrid::from_fn(h, w, c, |_, _| (0..c).map(|_| rng.gen_range(0.0..1.0)).collect())
    }

    #[test]
    fn constant_offset_pair_hits_a_round_decibel_value() {
        // Squared error 25.5^2 = 650.25 against peak 255 gives a power ratio
        // of exactly 100, i.e. 20 dB on the nose.
        let a = FeatureGrid::from_fn(4, 4, 3, |_, _| vec![25.5; 3]);
        let b = FeatureGrid::zeros(4, 4, 3);
        assert_eq!(psnr(&a, &b, 255.0, None).unwrap(), 20.0);
    }

    #[test]
    fn identical_images_have_infinite_psnr() {
        let a = random_image(1, 3, 5, 3);
        assert_eq!(psnr(&a, &a.clone(), 1.0, None).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mask_limits_psnr_to_selected_pixels() {
        let mut a = FeatureGrid::zeros(2, 2, 1);
        let b = FeatureGrid::zeros(2, 2, 1);
        a.set(1, 1, &[0.5]); // differs only in one corner
        let mut mask = FeatureGrid::from_fn(2, 2, 1, |_, _| vec![1.0]);
        mask.set(1, 1, &[0.0]);
        // With the differing pixel masked out the images agree exactly.
        assert_eq!(psnr(&a, &b, 1.0, Some(&mask)).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &b, 1.0, None).unwrap().is_finite());
        // A mask excluding everything cannot produce a mean.
        let none = FeatureGrid::zeros(2, 2, 1);
        assert!(matches!(psnr(&a, &b, 1.0, Some(&none)), Err(Error::EmptyInputSet)));
    }

    #[test]
    fn mse_averages_over_pixels_and_channels() {
        let a = FeatureGrid::from_vec(1, 2, 2, vec![1.0, 0.0, 0.0, 3.0]).unwrap();
        let b = FeatureGrid::zeros(1, 2, 2);
        // Squared errors 1, 0, 0, 9 over 4 entries.
        assert_relative_eq!(mean_squared_error(&a, &b, None).unwrap(), 2.5);
    }

    #[test]
    fn ssim_of_an_image_with_itself_is_exactly_one() {
        let a = random_image(7, 16, 13, 3);
        assert_eq!(ssim(&a, &a.clone(), 1.0, None).unwrap(), 1.0);
    }

    #[test]
    fn ssim_is_symmetric_and_below_one_for_different_images() {
        let a = random_image(3, 14, 14, 1);
        let b = random_image(4, 14, 14, 1);
        let ab = ssim(&a, &b, 1.0, None).unwrap();
        let ba = ssim(&b, &a, 1.0, None).unwrap();
        assert_eq!(ab, ba);
        assert!(ab < 1.0);
    }

    #[test]
    fn psnr_matches_scalar_loop_oracle() {
        let a = random_image(30, 9, 13, 3);
        let b = random_image(31, 9, 13, 3);
        let got = psnr(&a, &b, 1.0, None).unwrap();
        let (mut sum, mut n) = (0.0, 0u32);
        for (x, y) in a.data().iter().zip(b.data()) {
            sum += (x - y) * (x - y);
            n += 1;
        }
        let expected = 10.0 * (1.0 / (sum / n as f64)).log10();
        assert!((got - expected).abs() < 1e-9);
    }

    /// Independent per-window evaluation used as the structural-similarity
    /// oracle: its own window weights, its own accumulation order.
    fn ssim_oracle(a: &FeatureGrid, b: &FeatureGrid, max_value: f64) -> f64 {
        let mut weights = vec![0.0; 121];
        let mut wsum = 0.0;
        for i in 0..11i64 {
            for j in 0..11i64 {
                let d2 = ((i - 5) * (i - 5) + (j - 5) * (j - 5)) as f64;
                let v = (-d2 / 4.5).exp();
                weights[(i * 11 + j) as usize] = v;
                wsum += v;
            }
        }
        let (c1, c2) = ((0.01 * max_value).powi(2), (0.03 * max_value).powi(2));
        let (h, w) = a.dims();
        let (mut total, mut count) = (0.0, 0);
        for ci in 5..h - 5 {
            for cj in 5..w - 5 {
                for ch in 0..a.channels() {
                    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for i in 0..11 {
                        for j in 0..11 {
                            let wv = weights[i * 11 + j] / wsum;
                            let x = a.get(ci + i - 5, cj + j - 5)[ch];
                            let y = b.get(ci + i - 5, cj + j - 5)[ch];
                            mx += wv * x;
                            my += wv * y;
                            sxx += wv * x * x;
                            syy += wv * y * y;
                            sxy += wv * x * y;
                        }
                    }
                    total += (2.0 * mx * my + c1) * (2.0 * (sxy - mx * my) + c2)
                        / ((mx * mx + my * my + c1) * ((sxx - mx * mx) + (syy - my * my) + c2));
                    count += 1;
                }
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_matches_per_window_oracle_on_random_pair() {
        let a = random_image(10, 32, 32, 1);
        let b = random_image(11, 32, 32, 1);
        let got = ssim(&a, &b, 1.0, None).unwrap();
        assert!((got - ssim_oracle(&a, &b, 1.0)).abs() < 1e-6);
        // Multi-channel path too.
        let a3 = random_image(12, 16, 20, 3);
        let b3 = random_image(13, 16, 20, 3);
        let got3 = ssim(&a3, &b3, 1.0, None).unwrap();
        assert!((got3 - ssim_oracle(&a3, &b3, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn contrast_inversion_flips_the_covariance_sign() {
        // b = 1 - a inverts every window's structure around its mean, so the
        // covariance term goes negative and dominates for a high-variance
        // pattern (here a checkerboard).
        let a = FeatureGrid::from_fn(16, 16, 1, |i, j| {
            vec![if (i + j) % 2 == 0 { 0.9 } else { 0.1 }]
        });
        let b = FeatureGrid::from_fn(16, 16, 1, |i, j| vec![1.0 - a.get(i, j)[0]]);
        assert!(ssim(&a, &b, 1.0, None).unwrap() < 0.0);
    }

    #[test]
    fn ssim_rejects_images_below_the_window_size() {
        let a = FeatureGrid::zeros(10, 11, 1);
        assert!(matches!(
            ssim(&a, &a.clone(), 1.0, None),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn ssim_mask_restricts_window_centers() {
        let a = random_image(20, 13, 13, 1);
        let b = random_image(21, 13, 13, 1);
        // 13x13 has a 3x3 block of valid centers; keep only the middle one.
        let mask = FeatureGrid::from_fn(13, 13, 1, |i, j| {
            vec![if (i, j) == (6, 6) { 1.0 } else { 0.0 }]
        });
        let masked = ssim(&a, &b, 1.0, Some(&mask)).unwrap();
        let full = ssim(&a, &b, 1.0, None).unwrap();
        assert_ne!(masked, full);
        // Masking every center out is an error, same as an empty input.
        let none = FeatureGrid::zeros(13, 13, 1);
        assert!(matches!(ssim(&a, &b, 1.0, Some(&none)), Err(Error::EmptyInputSet)));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = FeatureGrid::zeros(4, 4, 3);
        let b = FeatureGrid::zeros(4, 5, 3);
        assert!(psnr(&a, &b, 1.0, None).is_err());
        let c = FeatureGrid::zeros(4, 4, 1);
        assert!(mean_squared_error(&a, &c, None).is_err());
    }
}
