//! Turning an attended latent grid into multi-resolution injection features.
//!
//! The attended grid is bilinearly upsampled by 2x and 4x, and each upsampled
//! copy is passed through a depthwise-separable convolution (a per-channel
//! 3x3 kernel with zero padding, then a pointwise channel-mixing matrix).

use crate::error::{Error, Result};
use crate::grid::FeatureGrid;

use super::weights::{DscWeights, ProjectionWeights};

/// Injection features at two resolutions relative to the attended grid.
#[derive(Debug, Clone)]
pub struct InjectionSet {
    /// 2x the attended grid's height and width.
    pub x2: FeatureGrid,
    /// 4x the attended grid's height and width.
    pub x4: FeatureGrid,
}

/// Depthwise 3x3 convolution (zero padding) followed by the pointwise
/// channel mix. Input channel count must match the kernel count.
pub fn apply_dsc(grid: &FeatureGrid, dsc: &DscWeights) -> Result<FeatureGrid> {
    let c = grid.channels();
    if dsc.channels() != c {
        return Err(Error::ShapeMismatch {
            context: "depthwise-separable conv channels",
            expected: format!("{} channels", dsc.channels()),
            actual: format!("{c} channels"),
        });
    }
    let (h, w) = grid.dims();
    let mut depthwise = FeatureGrid::zeros(h, w, c);
    for i in 0..h {
        for j in 0..w {
            let mut acc = vec![0.0; c];
            for du in 0..3usize {
                for dv in 0..3usize {
                    let (si, sj) = (i as isize + du as isize - 1, j as isize + dv as isize - 1);
                    if si < 0 || sj < 0 || si >= h as isize || sj >= w as isize {
                        continue; // zero padding
                    }
                    let src = grid.get(si as usize, sj as usize);
                    for ch in 0..c {
                        acc[ch] += dsc.depthwise[ch][du * 3 + dv] * src[ch];
                    }
                }
            }
            depthwise.set(i, j, &acc);
        }
    }
    let mut out = FeatureGrid::zeros(h, w, c);
    for i in 0..h {
        for j in 0..w {
            let src = depthwise.get(i, j);
            let mixed: Vec<f64> = (0..c)
                .map(|o| (0..c).map(|ch| dsc.pointwise[(o, ch)] * src[ch]).sum())
                .collect();
            out.set(i, j, &mixed);
        }
    }
    Ok(out)
}

/// Upsample the attended grid 2x and 4x and convolve each copy with its
/// resolution's weights. The grid's channel count must equal the weight
/// bundle's projection width, since it is attention output.
pub fn fuse_and_inject(attended: &FeatureGrid, weights: &ProjectionWeights) -> Result<InjectionSet> {
    let dk = weights.dk();
    if attended.channels() != dk {
        return Err(Error::ShapeMismatch {
            context: "injection input channels",
            expected: format!("{dk} channels"),
            actual: format!("{} channels", attended.channels()),
        });
    }
    let (h, w) = attended.dims();
    let up2 = attended.resample_bilinear(2 * h, 2 * w);
    let up4 = attended.resample_bilinear(4 * h, 4 * w);
    Ok(InjectionSet {
        x2: apply_dsc(&up2, &weights.dsc_2x)?,
        x4: apply_dsc(&up4, &weights.dsc_4x)?,
    })
}
