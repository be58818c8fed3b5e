//! Camera models and two-view epipolar geometry.

pub mod camera;
pub mod epipolar;

pub use camera::{
    rotation_deviation, CameraExtrinsics, CameraIntrinsics, CameraView, ROTATION_TOLERANCE,
};
pub use epipolar::{
    epipolar_distance_map, epipolar_line, fundamental_matrix, fundamental_matrix_with,
    point_line_distance, DistanceMapOptions, EpipolarDistanceMap, FundamentalForm,
};
