//! 3D Gaussian splatting: primitives, projection, rasterization, and
//! compositing gradients.

pub mod gradients;
pub mod primitive;
pub mod project;
pub mod render;

pub use gradients::{composite_pixel, compositing_gradients, PixelSplat, SplatGradient};
pub use primitive::{eval_sh, GaussianPrimitive, MAX_SH_DEGREE, SH_C0};
pub use project::{project_covariance, SplatProjection, DEFAULT_DILATION};
pub use render::{render_view, FrameBuffer, RenderSettings, ALPHA_CLAMP, DEFAULT_SIGMA_CUTOFF};
