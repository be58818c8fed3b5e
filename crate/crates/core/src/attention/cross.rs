//! Cross attention between a target feature grid and a reference feature
//! grid, modulated by geometric distances.
//!
//! Every target cell attends over every reference cell. Raw attention is the
//! scaled dot product of learned query/key projections; it is then multiplied
//! by a modulation weight derived from the epipolar distance between the two
//! cells, so reference cells near the target cell's epipolar line dominate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::EpipolarDistanceMap;
use crate::grid::FeatureGrid;

use super::weights::ProjectionWeights;

/// Which population the min/max modulation normalization is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormScope {
    /// Normalize each target cell's row of distances independently.
    #[default]
    PerRow,
    /// Normalize against the min/max over the entire distance map.
    Global,
}

/// Attention hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    /// Projection width; must match the weight bundle.
    pub dk: usize,
    /// Row-softmax the raw scores before modulation.
    pub apply_softmax: bool,
    /// Squash the modulated weights through a logistic gate before use.
    pub apply_sigmoid: bool,
    /// Downsampling factor of the latent grids relative to full-resolution
    /// images. Must be 1, 2, 4, or 8.
    pub latent_scale: usize,
    pub norm_scope: NormScope,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            dk: 8,
            apply_softmax: true,
            apply_sigmoid: true,
            latent_scale: 8,
            norm_scope: NormScope::PerRow,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dk == 0 {
            return Err(Error::ShapeMismatch {
                context: "attention width must be positive",
                expected: ">= 1".to_string(),
                actual: "0".to_string(),
            });
        }
        if ![1, 2, 4, 8].contains(&self.latent_scale) {
            return Err(Error::ShapeMismatch {
                context: "latent scale must be 1, 2, 4, or 8",
                expected: "1|2|4|8".to_string(),
                actual: self.latent_scale.to_string(),
            });
        }
        Ok(())
    }
}

/// Min–max normalized `exp(-distance)` modulation weights, one row per
/// target cell and one column per reference cell.
///
/// Within the chosen scope the cell at the smallest distance gets exactly
/// `1.0` and the cell at the largest distance exactly `0.0`. A scope whose
/// distances are all equal carries no ordering information, so its weights
/// are all ones (modulation disabled there).
pub fn distance_modulation(distances: &EpipolarDistanceMap, scope: NormScope) -> DMatrix<f64> {
    let rows = distances.target_len();
    let cols = distances.ref_len();
    let mut m = DMatrix::zeros(rows, cols);
    let fill_row = |out: &mut [f64], vals: &[f64], lo: f64, hi: f64| {
        let span = hi - lo;
        for (o, &d) in out.iter_mut().zip(vals) {
            *o = if span == 0.0 {
                1.0
            } else {
                // exp is monotone decreasing, so the min distance attains
                // exp(-lo) and divides to exactly 1.0; the max to exactly 0.0.
                ((-d).exp() - (-hi).exp()) / ((-lo).exp() - (-hi).exp())
            };
        }
    };
    match scope {
        NormScope::PerRow => {
            for p in 0..rows {
                let row = distances.row(p);
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut out = vec![0.0; cols];
                fill_row(&mut out, row, lo, hi);
                for q in 0..cols {
                    m[(p, q)] = out[q];
                }
            }
        }
        NormScope::Global => {
            let all = distances.values();
            let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for p in 0..rows {
                let mut out = vec![0.0; cols];
                fill_row(&mut out, distances.row(p), lo, hi);
                for q in 0..cols {
                    m[(p, q)] = out[q];
                }
            }
        }
    }
    m
}

fn flatten(grid: &FeatureGrid) -> DMatrix<f64> {
    // One row per cell in row-major order, one column per channel.
    let cells = grid.height() * grid.width();
    let c = grid.channels();
    DMatrix::from_fn(cells, c, |r, ch| grid.data()[r * c + ch])
}

fn row_softmax(scores: &mut DMatrix<f64>) {
    for mut row in scores.row_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_grid(
    context: &'static str,
    grid: &FeatureGrid,
    channels: usize,
    dims: (usize, usize),
) -> Result<()> {
    if grid.channels() != channels {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("{channels} channels"),
            actual: format!("{} channels", grid.channels()),
        });
    }
    if grid.dims() != dims {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("{}x{} grid", dims.0, dims.1),
            actual: format!("{}x{} grid", grid.height(), grid.width()),
        });
    }
    Ok(())
}

/// Distance-modulated cross attention from `target` cells onto `reference`
/// cells. Returns a grid with `target`'s spatial dims and `dk` channels.
///
/// Pipeline per target cell `p` and reference cell `q`:
/// raw score `(T Wq)(p) . (R Wk)(q) / sqrt(dk)`, optional row softmax,
/// multiplied by [`distance_modulation`], optional logistic gate, then the
/// output is the gate-weighted sum of value projections `(R Wv)(q)`.
pub fn epipolar_cross_attention(
    target: &FeatureGrid,
    reference: &FeatureGrid,
    distances: &EpipolarDistanceMap,
    weights: &ProjectionWeights,
    config: &AttentionConfig,
) -> Result<FeatureGrid> {
    config.validate()?;
    weights.validate()?;
    let c = weights.channels();
    if config.dk != weights.dk() {
        return Err(Error::ShapeMismatch {
            context: "attention width vs weight bundle",
            expected: weights.dk().to_string(),
            actual: config.dk.to_string(),
        });
    }
    check_grid("attention target grid", target, c, distances.target_dims())?;
    check_grid("attention reference grid", reference, c, distances.ref_dims())?;

    let t = flatten(target);
    let r = flatten(reference);
    let q = &t * &weights.wq; // cells_t x dk
    let k = &r * &weights.wk; // cells_r x dk
    let v = &r * &weights.wv; // cells_r x dk

    let mut attn = &q * k.transpose(); // cells_t x cells_r
    attn /= (config.dk as f64).sqrt();
    if config.apply_softmax {
        row_softmax(&mut attn);
    }

    let modulation = distance_modulation(distances, config.norm_scope);
    attn.component_mul_assign(&modulation);
    if config.apply_sigmoid {
        attn.apply(|x| *x = sigmoid(*x));
    }

    let out = attn * v; // cells_t x dk
    let (h, w) = distances.target_dims();
    FeatureGrid::from_vec(h, w, config.dk, {
        let mut data = Vec::with_capacity(h * w * config.dk);
        for p in 0..h * w {
            for ch in 0..config.dk {
                data.push(out[(p, ch)]);
            }
        }
        data
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> FeatureGrid {
        FeatureGrid::from_fn(h, w, c, |_, _| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn map_from(tdims: (usize, usize), rdims: (usize, usize), vals: Vec<f64>) -> EpipolarDistanceMap {
        EpipolarDistanceMap::from_values(tdims, rdims, vals).unwrap()
    }

    #[test]
    fn modulation_extremes_are_exact() {
        let dmap = map_from((1, 1), (1, 3), vec![0.7, 0.2, 5.0]);
        let m = distance_modulation(&dmap, NormScope::PerRow);
        assert_eq!(m[(0, 1)], 1.0, "smallest distance must map to exactly one");
        assert_eq!(m[(0, 2)], 0.0, "largest distance must map to exactly zero");
        assert!(m[(0, 0)] > 0.0 && m[(0, 0)] < 1.0);
        // Monotone decreasing in distance.
        assert!(m[(0, 1)] > m[(0, 0)] && m[(0, 0)] > m[(0, 2)]);
    }

    #[test]
    fn constant_distances_disable_modulation() {
        let dmap = map_from((2, 1), (1, 2), vec![3.0; 4]);
        let m = distance_modulation(&dmap, NormScope::PerRow);
        assert!(m.iter().all(|&v| v == 1.0));
        let g = distance_modulation(&dmap, NormScope::Global);
        assert!(g.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn scopes_differ_when_rows_have_different_ranges() {
        // Row 0 spans [0,1], row 1 spans [2,3]. Globally min=0, max=3.
        let dmap = map_from((2, 1), (1, 2), vec![0.0, 1.0, 2.0, 3.0]);
        let per_row = distance_modulation(&dmap, NormScope::PerRow);
        let global = distance_modulation(&dmap, NormScope::Global);
        assert_eq!(per_row[(1, 0)], 1.0);
        assert_eq!(per_row[(1, 1)], 0.0);
        assert!(global[(1, 0)] < 1.0, "row 1 min is not the global min");
        assert_eq!(global[(0, 0)], 1.0);
        assert_eq!(global[(1, 1)], 0.0);
    }

    #[test]
    fn constant_distance_map_matches_unmodulated_attention() {
        // With all distances equal the modulation is all ones, so two
        // different constant maps must produce bit-identical outputs.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let target = random_grid(&mut rng, 2, 3, 4);
        let reference = random_grid(&mut rng, 3, 2, 4);
        let weights = ProjectionWeights::seeded(4, 5, 2);
        let config = AttentionConfig { dk: 5, ..AttentionConfig::default() };
        let d1 = map_from((2, 3), (3, 2), vec![0.25; 36]);
        let d2 = map_from((2, 3), (3, 2), vec![9.0; 36]);
        let a = epipolar_cross_attention(&target, &reference, &d1, &weights, &config).unwrap();
        let b = epipolar_cross_attention(&target, &reference, &d2, &weights, &config).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(a.dims(), (2, 3));
        assert_eq!(a.channels(), 5);
    }

    #[test]
    fn softmax_rows_average_identical_values() {
        // All reference cells carry identical features, so V has identical
        // rows; a softmax row (which sums to one) must return exactly that
        // shared value row when sigmoid and modulation are inert.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let target = random_grid(&mut rng, 1, 2, 3);
        let reference = FeatureGrid::from_fn(2, 2, 3, |_, _| vec![0.4, -0.2, 0.9]);
        let weights = ProjectionWeights::seeded(3, 4, 6);
        let config = AttentionConfig {
            dk: 4,
            apply_sigmoid: false,
            ..AttentionConfig::default()
        };
        let dmap = map_from((1, 2), (2, 2), vec![1.0; 8]);
        let out = epipolar_cross_attention(&target, &reference, &dmap, &weights, &config).unwrap();
        // expected = value projection of the shared feature vector.
        let feat = [0.4, -0.2, 0.9];
        let mut expected = [0.0; 4];
        for d in 0..4 {
            expected[d] = (0..3).map(|ch| feat[ch] * weights.wv[(ch, d)]).sum();
        }
        for p in 0..2 {
            for d in 0..4 {
                assert_relative_eq!(out.get(0, p)[d], expected[d], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn output_is_invariant_to_reference_cell_permutation() {
        // Reversing the reference cell order (and the distance columns with
        // it) must leave the output unchanged: attention has no positional
        // notion of the reference grid beyond the distance map.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let target = random_grid(&mut rng, 2, 2, 3);
        let reference = random_grid(&mut rng, 1, 4, 3);
        let weights = ProjectionWeights::seeded(3, 3, 14);
        let config = AttentionConfig { dk: 3, ..AttentionConfig::default() };
        let dists: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..4.0)).collect();
        let dmap = map_from((2, 2), (1, 4), dists.clone());
        let base = epipolar_cross_attention(&target, &reference, &dmap, &weights, &config).unwrap();

        let flipped_ref = FeatureGrid::from_fn(1, 4, 3, |_, j| reference.get(0, 3 - j).to_vec());
        let mut flipped_d = vec![0.0; 16];
        for p in 0..4 {
            for q in 0..4 {
                flipped_d[p * 4 + (3 - q)] = dists[p * 4 + q];
            }
        }
        let dmap_f = map_from((2, 2), (1, 4), flipped_d);
        let flipped =
            epipolar_cross_attention(&target, &flipped_ref, &dmap_f, &weights, &config).unwrap();
        for (a, b) in base.data().iter().zip(flipped.data()) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let target = FeatureGrid::zeros(2, 2, 3);
        let reference = FeatureGrid::zeros(2, 2, 3);
        let weights = ProjectionWeights::seeded(3, 4, 0);
        let dmap = map_from((2, 2), (2, 2), vec![1.0; 16]);
        let good = AttentionConfig { dk: 4, ..AttentionConfig::default() };

        // dk disagrees with the bundle.
        let bad_dk = AttentionConfig { dk: 5, ..good };
        assert!(epipolar_cross_attention(&target, &reference, &dmap, &weights, &bad_dk).is_err());
        // Wrong channel count.
        let narrow = FeatureGrid::zeros(2, 2, 2);
        assert!(epipolar_cross_attention(&narrow, &reference, &dmap, &weights, &good).is_err());
        // Wrong spatial dims vs the distance map.
        let wide = FeatureGrid::zeros(2, 3, 3);
        assert!(epipolar_cross_attention(&wide, &reference, &dmap, &weights, &good).is_err());
        // Bad latent scale.
        let bad_scale = AttentionConfig { latent_scale: 3, ..good };
        assert!(bad_scale.validate().is_err());
    }
}
