//! Property tests for library invariants that hold on whole input families,
//! not just hand-picked examples.

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use prosplat::attention::{distance_modulation, NormScope};
use prosplat::geometry::epipolar::skew;
use prosplat::geometry::{CameraExtrinsics, CameraIntrinsics, CameraView, EpipolarDistanceMap};
use prosplat::metrics::{mean_squared_error, psnr, ssim};
use prosplat::scene::{parse_pose_file, serialize_pose_file, PoseRecord};
use prosplat::select::{select_reference, SelectionConfig};
use prosplat::splat::{composite_pixel, PixelSplat};
use prosplat::sweep::{sample_depth_candidates, DepthSpacing};
use prosplat::FeatureGrid;

fn grid_strategy(
    dims: impl Strategy<Value = (usize, usize, usize)>,
    lo: f64,
    hi: f64,
) -> impl Strategy<Value = FeatureGrid> {
    dims.prop_flat_map(move |(h, w, c)| {
        proptest::collection::vec(lo..hi, h * w * c)
            .prop_map(move |data| FeatureGrid::from_vec(h, w, c, data).unwrap())
    })
}

proptest! {
    /// Depth candidates are pinned to the endpoints, strictly increasing,
    /// and uniform in inverse depth.
    #[test]
    fn depth_candidates_are_pinned_and_uniform_in_inverse_depth(
        near in 0.05f64..10.0,
        span in 0.5f64..50.0,
        count in 2usize..64,
    ) {
        let far = near + span;
        let d = sample_depth_candidates(near, far, count, DepthSpacing::InverseDepth).unwrap();
        prop_assert_eq!(d.len(), count);
        prop_assert_eq!(d[0], near);
        prop_assert_eq!(d[count - 1], far);
        for w in d.windows(2) {
            prop_assert!(w[0] < w[1], "candidates must increase: {:?}", w);
        }
        let step = (1.0 / near - 1.0 / far) / (count - 1) as f64;
        for (m, &depth) in d.iter().enumerate() {
            let expected = 1.0 / near - m as f64 * step;
            prop_assert!(((1.0 / depth) - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    /// Per-row modulation stays in [0, 1]; rows with distinct distances
    /// attain exactly 1 at their minimum and exactly 0 at their maximum,
    /// and constant rows are all ones.
    #[test]
    fn modulation_is_bounded_with_exact_extremes(
        rows in 1usize..6,
        cols in 2usize..8,
        seed_values in proptest::collection::vec(0.0f64..40.0, 1..48),
        constant_row in any::<bool>(),
    ) {
        let n = rows * cols;
        let mut values: Vec<f64> = (0..n).map(|i| seed_values[i % seed_values.len()]).collect();
        if constant_row {
            for v in values.iter_mut().take(cols) {
                *v = 7.25;
            }
        }
        let dmap = EpipolarDistanceMap::from_values((rows, 1), (1, cols), values.clone()).unwrap();
        let modulation = distance_modulation(&dmap, NormScope::PerRow);
        for p in 0..rows {
            let row = &values[p * cols..(p + 1) * cols];
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for q in 0..cols {
                let m = modulation[(p, q)];
                prop_assert!((0.0..=1.0).contains(&m), "modulation {} out of range", m);
                if hi == lo {
                    prop_assert_eq!(m, 1.0);
                } else {
                    if row[q] == lo { prop_assert_eq!(m, 1.0); }
                    if row[q] == hi { prop_assert_eq!(m, 0.0); }
                }
            }
        }
    }

    /// Mean squared error is symmetric and non-negative; identical images
    /// score zero and hit the infinite-ratio sentinel.
    #[test]
    fn mse_is_symmetric_and_identity_hits_the_sentinel(
        grid in grid_strategy((1usize..6, 1usize..6, 1usize..4), 0.0, 1.0),
        shift in 0.0f64..0.5,
    ) {
        let mut other = grid.clone();
        for (i, v) in other.data_mut().iter_mut().enumerate() {
            *v = (*v + shift * ((i % 3) as f64 - 1.0)).clamp(0.0, 1.0);
        }
        let ab = mean_squared_error(&grid, &other, None).unwrap();
        let ba = mean_squared_error(&other, &grid, None).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(mean_squared_error(&grid, &grid, None).unwrap(), 0.0);
        prop_assert!(psnr(&grid, &grid, 1.0, None).unwrap().is_infinite());
    }

    /// Structural similarity is bounded and exactly one on identical images.
    #[test]
    fn ssim_is_bounded_and_one_on_self(
        grid in grid_strategy((11usize..16, 11usize..16, 1usize..3), 0.0, 1.0),
        shift in 0.0f64..0.4,
    ) {
        let mut other = grid.clone();
        for (i, v) in other.data_mut().iter_mut().enumerate() {
            *v = (*v + shift * (((i % 5) as f64) / 2.0 - 1.0)).clamp(0.0, 1.0);
        }
        let s = ssim(&grid, &other, 1.0, None).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s), "ssim {} out of bounds", s);
        prop_assert_eq!(ssim(&grid, &grid, 1.0, None).unwrap(), 1.0);
    }

    /// Resampling a grid to its own resolution reproduces it exactly
    /// (bilinear weights collapse to identity at pixel centers).
    #[test]
    fn resample_to_same_resolution_is_identity(
        grid in grid_strategy((1usize..7, 1usize..7, 1usize..4), -10.0, 10.0),
    ) {
        let (h, w) = grid.dims();
        let same = grid.resample_bilinear(h, w);
        prop_assert_eq!(same.data(), grid.data());
    }

    /// The cross-product matrix annihilates its own vector and is
    /// antisymmetric.
    #[test]
    fn skew_matrix_annihilates_its_vector(
        x in -10.0f64..10.0,
        y in -10.0f64..10.0,
        z in -10.0f64..10.0,
    ) {
        let t = Vector3::new(x, y, z);
        let s = skew(&t);
        prop_assert_eq!(s * t, Vector3::zeros());
        prop_assert_eq!(s.transpose(), -s);
    }

    /// Appending a duplicate of the winning view never changes the winner:
    /// score ties resolve to the lowest index.
    #[test]
    fn duplicated_winner_keeps_the_lower_index(
        tx in -3.0f64..3.0,
        ty in -3.0f64..3.0,
        cams in 2usize..6,
        spread in 0.3f64..2.0,
    ) {
        let view_at = |x: f64, y: f64, z: f64| {
            let k = CameraIntrinsics::new(100.0, 100.0, 32.0, 32.0, 64, 64).unwrap();
            let e = CameraExtrinsics::new(Matrix3::identity(), Vector3::new(x, y, z)).unwrap();
            CameraView::new(k, e, 0.1, 100.0).unwrap()
        };
        let target = view_at(tx, ty, 1.0);
        let inputs: Vec<CameraView> = (0..cams)
            .map(|i| view_at(tx + spread * (i as f64 + 0.5), ty - spread * (i as f64), 1.0))
            .collect();
        let cfg = SelectionConfig::default();
        let (winner, score) = select_reference(&target, &inputs, &cfg).unwrap();

        let mut extended = inputs.clone();
        extended.push(extended[winner]);
        let (winner2, score2) = select_reference(&target, &extended, &cfg).unwrap();
        prop_assert_eq!(winner2, winner);
        prop_assert_eq!(score2.score, score.score);
    }

    /// A zero-opacity splat is invisible: inserting one anywhere leaves the
    /// composite bit-identical.
    #[test]
    fn zero_opacity_splats_are_invisible(
        stack in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..0.9, 0.05f64..1.0), 1..7),
        insert_at in 0usize..7,
        ghost_weight in 0.0f64..1.0,
    ) {
        let splats: Vec<PixelSplat> = stack
            .iter()
            .map(|&(r, g, b, opacity, weight)| PixelSplat { color: [r, g, b], opacity, weight })
            .collect();
        let mut with_ghost = splats.clone();
        let at = insert_at.min(with_ghost.len());
        with_ghost.insert(at, PixelSplat { color: [0.3, 0.6, 0.9], opacity: 0.0, weight: ghost_weight });

        let (c1, a1) = composite_pixel(&splats, [0.1, 0.2, 0.3]);
        let (c2, a2) = composite_pixel(&with_ghost, [0.1, 0.2, 0.3]);
        prop_assert_eq!(c1, c2);
        prop_assert_eq!(a1, a2);
    }

    /// Pose files round-trip exactly: parse(serialize(records)) == records.
    #[test]
    fn pose_serialization_round_trips_exactly(
        seeds in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -4.0f64..4.0), 1..6),
        base_time in 0.0f64..1e6,
    ) {
        let records: Vec<PoseRecord> = seeds
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c, t))| {
                // Proper rotation from an axis-angle built out of the seeds.
                let axis = Vector3::new(a, b, 0.4 + c * c);
                let rotation = nalgebra::Rotation3::from_axis_angle(
                    &nalgebra::Unit::new_normalize(axis),
                    a + 2.0 * b,
                )
                .into_inner();
                PoseRecord {
                    timestamp: base_time + i as f64 * 0.25,
                    intrinsics: [0.5 + 0.1 * a, 0.5 + 0.1 * b, 0.5 + 0.05 * c, 0.5 - 0.05 * a],
                    unused: [0.0, 0.0],
                    rotation,
                    translation: Vector3::new(t, -t * 0.5, 2.0 + c),
                }
            })
            .collect();
        let text = serialize_pose_file(&records, Some("poses"));
        let back = parse_pose_file(&text).unwrap();
        prop_assert_eq!(back, records);
    }
}
