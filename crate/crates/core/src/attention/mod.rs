//! Distance-modulated cross attention, multi-resolution feature injection,
//! and the weight container that feeds both.

pub mod backend;
pub mod cross;
pub mod inject;
pub mod weights;

pub use backend::{DenoisingBackend, IdentityBackend};
pub use cross::{distance_modulation, epipolar_cross_attention, AttentionConfig, NormScope};
pub use inject::{apply_dsc, fuse_and_inject, InjectionSet};
pub use weights::{DscWeights, ProjectionWeights};
