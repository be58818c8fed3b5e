//! Scene ingestion and emission: pose files, manifests, images, primitive
//! sets, synthetic scene generation, and dataset curation.

pub mod curate;
pub mod image_io;
pub mod manifest;
pub mod pose;
pub mod primitives;
pub mod synthetic;

pub use curate::{curate_pairs, CuratedPair, CurationResult};
pub use image_io::{load_image, load_mask, save_image};
pub use manifest::{load_scene_manifest, manifest_to_doc, ManifestDoc, SceneManifest, SceneView};
pub use pose::{parse_pose_file, serialize_pose_file, PoseRecord};
pub use primitives::{load_primitives, save_primitives};
pub use synthetic::{generate_scene, SyntheticConfig};
