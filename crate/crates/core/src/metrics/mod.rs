//! Image quality metrics and training losses.

pub mod losses;
pub mod quality;

pub use losses::{
    improvement_loss, joint_loss, LossBreakdown, PerceptualTerm, ZeroPerceptual, PERCEPTUAL_LAMBDA,
};
pub use quality::{mean_squared_error, psnr, ssim, SSIM_SIGMA, SSIM_WINDOW};
