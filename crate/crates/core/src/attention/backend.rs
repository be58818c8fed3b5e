//! Pluggable consumer of injection features.
//!
//! The geometry pipeline produces multi-resolution injection grids; what
//! swallows them (a learned denoiser, a test double, a dump-to-disk shim) is
//! behind this trait so the pipeline stays backend-agnostic.

use crate::error::{Error, Result};
use crate::grid::FeatureGrid;

use super::inject::InjectionSet;

/// A denoising stage that folds injection features into a target latent at a
/// given timestep.
pub trait DenoisingBackend {
    fn enhance(
        &self,
        target_latent: &FeatureGrid,
        injections: &InjectionSet,
        timestep: usize,
    ) -> Result<FeatureGrid>;
}

/// Reference backend: resamples each injection grid to the latent's own
/// resolution and adds it on. Ignores the timestep. With all-zero injections
/// this is the identity, which makes pipeline plumbing easy to verify.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl DenoisingBackend for IdentityBackend {
    fn enhance(
        &self,
        target_latent: &FeatureGrid,
        injections: &InjectionSet,
        _timestep: usize,
    ) -> Result<FeatureGrid> {
        let c = target_latent.channels();
        for (label, grid) in [("2x", &injections.x2), ("4x", &injections.x4)] {
            if grid.channels() != c {
                return Err(Error::ShapeMismatch {
                    context: "injection channels vs target latent",
                    expected: c.to_string(),
                    actual: format!("{} channels in {label} injection", grid.channels()),
                });
            }
        }
        let (h, w) = target_latent.dims();
        let mut out = target_latent.clone();
        for grid in [&injections.x2, &injections.x4] {
            let resampled =
                if grid.dims() == (h, w) { grid.clone() } else { grid.resample_bilinear(h, w) };
            out = out.add(&resampled)?;
        }
        Ok(out)
    }
}
