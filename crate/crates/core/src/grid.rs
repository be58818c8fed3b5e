//! Dense row-major feature grids.
//!
//! A [`FeatureGrid`] is an `h x w` raster of `c`-channel f64 features. It is
//! the common currency between the warping, attention, metrics, and image I/O
//! modules: an RGB image is simply a grid with `c == 3` and values in [0, 1].
//!
//! Coordinate convention (shared with the camera code): the center of cell
//! `(row i, col j)` sits at continuous position `(x, y) = (j + 0.5, i + 0.5)`,
//! so a grid spans `[0, w) x [0, h)` in continuous coordinates.

use crate::error::{Error, Result};

/// Padding behavior for samples that fall outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Out-of-range taps read as 0.
    Zero,
    /// Out-of-range taps clamp to the nearest edge cell.
    Clamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureGrid {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "grid dims must be positive");
        FeatureGrid { height, width, channels, data: vec![0.0; height * width * channels] }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                context: "feature grid buffer length",
                expected: format!("{}", height * width * channels),
                actual: format!("{}", data.len()),
            });
        }
        Ok(FeatureGrid { height, width, channels, data })
    }

    /// Build a grid by evaluating `f(row, col)` for every cell.
    pub fn from_fn(height: usize, width: usize, channels: usize, mut f: impl FnMut(usize, usize) -> Vec<f64>) -> Self {
        let mut g = FeatureGrid::zeros(height, width, channels);
        for i in 0..height {
            for j in 0..width {
                let v = f(i, j);
                assert_eq!(v.len(), channels, "from_fn closure returned wrong channel count");
                g.set(i, j, &v);
            }
        }
        g
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn base(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        (row * self.width + col) * self.channels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &[f64] {
        let b = self.base(row, col);
        &self.data[b..b + self.channels]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: &[f64]) {
        let b = self.base(row, col);
        self.data[b..b + self.channels].copy_from_slice(value);
    }

    /// Bilinear sample at continuous position `(x, y)` (cell-center convention).
    ///
    /// Writes one value per channel into `out`.
    pub fn sample_bilinear(&self, x: f64, y: f64, padding: Padding, out: &mut [f64]) {
        assert_eq!(out.len(), self.channels);
        // Shift into index space where cell (i, j) lives at (j, i).
        let sx = x - 0.5;
        let sy = y - 0.5;
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);

        out.fill(0.0);
        for (dy, wy) in [(0i64, 1.0 - fy), (1i64, fy)] {
            for (dx, wx) in [(0i64, 1.0 - fx), (1i64, fx)] {
                let w = wx * wy;
                if w == 0.0 {
                    continue;
                }
                let (ix, iy) = (x0 + dx, y0 + dy);
                let tap = self.tap(ix, iy, padding);
                if let Some(cell) = tap {
                    for ch in 0..self.channels {
                        out[ch] += w * cell[ch];
                    }
                }
            }
        }
    }

    fn tap(&self, ix: i64, iy: i64, padding: Padding) -> Option<&[f64]> {
        match padding {
            Padding::Zero => {
                if ix < 0 || iy < 0 || ix >= self.width as i64 || iy >= self.height as i64 {
                    None
                } else {
                    Some(self.get(iy as usize, ix as usize))
                }
            }
            Padding::Clamp => {
                let ix = ix.clamp(0, self.width as i64 - 1) as usize;
                let iy = iy.clamp(0, self.height as i64 - 1) as usize;
                Some(self.get(iy, ix))
            }
        }
    }

    /// Bilinear resample to a new resolution (clamp padding, cell-center
    /// alignment). A constant grid resamples to the same constant exactly.
    pub fn resample_bilinear(&self, new_height: usize, new_width: usize) -> FeatureGrid {
        assert!(new_height > 0 && new_width > 0);
        let sx = self.width as f64 / new_width as f64;
        let sy = self.height as f64 / new_height as f64;
        let mut out = FeatureGrid::zeros(new_height, new_width, self.channels);
        let mut buf = vec![0.0; self.channels];
        for i in 0..new_height {
            for j in 0..new_width {
                let x = (j as f64 + 0.5) * sx;
                let y = (i as f64 + 0.5) * sy;
                self.sample_bilinear(x, y, Padding::Clamp, &mut buf);
                out.set(i, j, &buf);
            }
        }
        out
    }

    /// Element-wise sum; shapes must match.
    pub fn add(&self, other: &FeatureGrid) -> Result<FeatureGrid> {
        if self.height != other.height || self.width != other.width || self.channels != other.channels {
            return Err(Error::ShapeMismatch {
                context: "grid addition",
                expected: format!("{}x{}x{}", self.height, self.width, self.channels),
                actual: format!("{}x{}x{}", other.height, other.width, other.channels),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(FeatureGrid { height: self.height, width: self.width, channels: self.channels, data })
    }

    /// Min and max over all entries. Returns `None` for an all-NaN grid.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for &v in &self.data {
            if v.is_nan() {
                continue;
            }
            mn = mn.min(v);
            mx = mx.max(v);
        }
        if mn.is_finite() || mx.is_finite() {
            Some((mn, mx))
        } else {
            None
        }
    }
}
