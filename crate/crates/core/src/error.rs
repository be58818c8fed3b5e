//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants carry
//! enough context to be rendered as a machine-readable report (the CLI turns
//! them into JSON on stderr).

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Relative translation between the two views is (numerically) zero, so
    /// no fundamental matrix exists.
    #[error("degenerate baseline: relative translation magnitude {magnitude:e} is below 1e-12")]
    DegenerateBaseline { magnitude: f64 },

    /// A primitive mean sits behind (or on) the camera's near plane.
    #[error("primitive behind camera: camera-space depth {depth} <= near {near}")]
    BehindCamera { depth: f64, near: f64 },

    /// Camera parameters violate their construction invariants.
    #[error("invalid camera: {reason}")]
    InvalidCamera { reason: String },

    /// Gaussian primitive parameters violate their construction invariants.
    #[error("invalid primitive: {reason}")]
    InvalidPrimitive { reason: String },

    /// A selection operation received no candidate views.
    #[error("empty input view set")]
    EmptyInputSet,

    /// Depth sampling range must satisfy 0 < near < far.
    #[error("invalid depth range: near {near}, far {far}")]
    InvalidRange { near: f64, far: f64 },

    /// Two grids/tensors that must agree in shape do not.
    #[error("shape mismatch: {context} (expected {expected}, got {actual})")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// An image is smaller than the analysis window.
    #[error("image too small: {width}x{height} is below the {side}x{side} window")]
    ImageTooSmall { width: usize, height: usize, side: usize },

    /// A batched loss was invoked with no elements.
    #[error("empty batch")]
    EmptyBatch,

    /// A pose file line is not parseable.
    #[error("malformed pose line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    /// A parsed rotation block is not orthonormal.
    #[error("non-rigid rotation at pose line {line}: max deviation {deviation:e} from orthonormality")]
    NonRigidRotation { line: usize, deviation: f64 },

    /// A file referenced by a manifest does not exist.
    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },

    /// Scene manifest indices are out of range, overlapping, or otherwise unusable.
    #[error("invalid indices: {reason}")]
    InvalidIndices { reason: String },

    /// Curation was requested on a scene with no target views.
    #[error("scene has no target views")]
    NoTargets,

    /// A serialized weight bundle is structurally invalid.
    #[error("malformed weight bundle: {reason}")]
    MalformedWeights { reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Stable machine-readable discriminant, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateBaseline { .. } => "degenerate_baseline",
            Error::BehindCamera { .. } => "behind_camera",
            Error::InvalidCamera { .. } => "invalid_camera",
            Error::InvalidPrimitive { .. } => "invalid_primitive",
            Error::EmptyInputSet => "empty_input_set",
            Error::InvalidRange { .. } => "invalid_range",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::ImageTooSmall { .. } => "image_too_small",
            Error::EmptyBatch => "empty_batch",
            Error::MalformedLine { .. } => "malformed_line",
            Error::NonRigidRotation { .. } => "non_rigid_rotation",
            Error::MissingFile { .. } => "missing_file",
            Error::InvalidIndices { .. } => "invalid_indices",
            Error::NoTargets => "no_targets",
            Error::MalformedWeights { .. } => "malformed_weights",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Image(_) => "image",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
