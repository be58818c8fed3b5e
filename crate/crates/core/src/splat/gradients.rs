//! Front-to-back alpha compositing at a single pixel, and its analytic
//! gradients.
//!
//! Given depth-sorted splats with per-pixel Gaussian falloff `g_i` and
//! opacity `a_i`, the effective alpha is `ea_i = a_i * g_i` and the
//! composited color is
//!
//! ```text
//! C = sum_i  c_i * ea_i * T_i,      T_i = prod_{j<i} (1 - ea_j)
//! ```
//!
//! [`compositing_gradients`] differentiates this foreground sum (no
//! background term) with respect to each splat's color and opacity:
//!
//! ```text
//! dC/dc_i      = ea_i * T_i                                  (per channel)
//! dC/da_i (ch) = g_i * ( c_i T_i  -  sum_{k>i} c_k ea_k T_k / (1 - ea_i) )
//! ```

/// One splat's contribution inputs at a fixed pixel, already depth-sorted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSplat {
    pub color: [f64; 3],
    /// Primitive opacity `a_i` in [0, 1].
    pub opacity: f64,
    /// Gaussian falloff `g_i = exp(-0.5 d^T cov2d^-1 d)` at this pixel, in [0, 1].
    pub weight: f64,
}

impl PixelSplat {
    pub fn effective_alpha(&self) -> f64 {
        self.opacity * self.weight
    }
}

/// Per-splat gradients of the composited color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatGradient {
    /// `dC_ch / dc_{i, ch}`; identical for every channel.
    pub d_color: f64,
    /// `dC_ch / da_i` for each channel.
    pub d_opacity: [f64; 3],
}

/// Front-to-back composite over sorted splats; returns the color and the
/// accumulated alpha `1 - T_final`. The background contributes `T_final * bg`.
pub fn composite_pixel(splats: &[PixelSplat], background: [f64; 3]) -> ([f64; 3], f64) {
    let mut color = [0.0; 3];
    let mut transmittance = 1.0;
    for s in splats {
        let ea = s.effective_alpha();
        let w = ea * transmittance;
        for ch in 0..3 {
            color[ch] += s.color[ch] * w;
        }
        transmittance *= 1.0 - ea;
    }
    for ch in 0..3 {
        color[ch] += background[ch] * transmittance;
    }
    (color, 1.0 - transmittance)
}

/// Analytic gradients of the foreground compositing sum.
///
/// Precondition: effective alphas strictly below 1 (the division by
/// `1 - ea_i` is what propagates attenuation through later splats).
pub fn compositing_gradients(splats: &[PixelSplat]) -> Vec<SplatGradient> {
    let n = splats.len();
    // Forward pass: transmittance in front of each splat.
    let mut t = vec![1.0; n];
    for i in 1..n {
        t[i] = t[i - 1] * (1.0 - splats[i - 1].effective_alpha());
    }

    // Backward pass: suffix[ch] = sum_{k>i} c_k ea_k T_k.
    let mut grads = vec![SplatGradient { d_color: 0.0, d_opacity: [0.0; 3] }; n];
    let mut suffix = [0.0f64; 3];
    for i in (0..n).rev() {
        let s = &splats[i];
        let ea = s.effective_alpha();
        debug_assert!(ea < 1.0, "effective alpha must stay below 1");
        let d_color = ea * t[i];
        let mut d_opacity = [0.0; 3];
        for ch in 0..3 {
            d_opacity[ch] = s.weight * (s.color[ch] * t[i] - suffix[ch] / (1.0 - ea));
        }
        grads[i] = SplatGradient { d_color, d_opacity };
        for ch in 0..3 {
            suffix[ch] += s.color[ch] * ea * t[i];
        }
    }
    grads
}
