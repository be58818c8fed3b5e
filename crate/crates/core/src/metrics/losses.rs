//! Training-style losses: a pixel reconstruction term plus a weighted
//! perceptual term, evaluated per pair or jointly over a batch.

use crate::error::{Error, Result};
use crate::grid::FeatureGrid;

use super::quality::mean_squared_error;

/// Weight of the perceptual term inside the total loss.
pub const PERCEPTUAL_LAMBDA: f64 = 5.0;

/// A pluggable perceptual distance between a rendered image and its ground
/// truth. Implementations return a scalar penalty (0 = identical).
pub trait PerceptualTerm {
    fn evaluate(&self, rendered: &FeatureGrid, truth: &FeatureGrid) -> Result<f64>;
}

/// Stand-in perceptual term that always reports zero distance. Lets the loss
/// plumbing run without a learned feature extractor; `LossBreakdown`
/// records that the perceptual channel was inert.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPerceptual;

impl PerceptualTerm for ZeroPerceptual {
    fn evaluate(&self, _rendered: &FeatureGrid, _truth: &FeatureGrid) -> Result<f64> {
        Ok(0.0)
    }
}

/// Itemized loss values. `total` is always `mse + lambda * perceptual`
/// (summed, not averaged, across a batch so that joint and per-pair
/// evaluation agree to the last bit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub mse: f64,
    pub perceptual: f64,
    pub lambda: f64,
    pub total: f64,
    /// False when the perceptual slot was filled by [`ZeroPerceptual`]
    /// (or the caller passed no term).
    pub perceptual_active: bool,
}

/// Loss for a single rendered/truth pair. Passing `None` for the perceptual
/// term uses [`ZeroPerceptual`] and marks the breakdown accordingly.
pub fn improvement_loss(
    rendered: &FeatureGrid,
    truth: &FeatureGrid,
    perceptual: Option<&dyn PerceptualTerm>,
) -> Result<LossBreakdown> {
    let mse = mean_squared_error(rendered, truth, None)?;
    let (p, active) = match perceptual {
        Some(term) => (term.evaluate(rendered, truth)?, true),
        None => (ZeroPerceptual.evaluate(rendered, truth)?, false),
    };
    Ok(LossBreakdown {
        mse,
        perceptual: p,
        lambda: PERCEPTUAL_LAMBDA,
        total: mse + PERCEPTUAL_LAMBDA * p,
        perceptual_active: active,
    })
}

/// Joint loss over a batch of pairs: the exact sum of the per-pair
/// breakdowns, term by term. Empty batches are rejected.
pub fn joint_loss(
    pairs: &[(FeatureGrid, FeatureGrid)],
    perceptual: Option<&dyn PerceptualTerm>,
) -> Result<LossBreakdown> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut acc = LossBreakdown {
        mse: 0.0,
        perceptual: 0.0,
        lambda: PERCEPTUAL_LAMBDA,
        total: 0.0,
        perceptual_active: perceptual.is_some(),
    };
    for (rendered, truth) in pairs {
        let one = improvement_loss(rendered, truth, perceptual)?;
        acc.mse += one.mse;
        acc.perceptual += one.perceptual;
        acc.total += one.total;
    }
    Ok(acc)
}
