//! 8-bit image files as [`FeatureGrid`]s.
//!
//! Grids hold values in `[0, 1]`; files hold 8-bit samples. Supported
//! formats, chosen by extension: PNG (gray or RGB) and ASCII PPM (`P3`,
//! RGB). Saving clamps to `[0, 1]` and rounds to the nearest 8-bit level,
//! so a save → load cycle is exact for already-quantized values.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::grid::FeatureGrid;

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn check_channels(grid: &FeatureGrid) -> Result<()> {
    if grid.channels() != 1 && grid.channels() != 3 {
        return Err(Error::ShapeMismatch {
            context: "image channels",
            expected: "1 or 3".to_string(),
            actual: grid.channels().to_string(),
        });
    }
    Ok(())
}

/// Save as PNG (`.png`) or ASCII PPM (`.ppm`), by extension.
pub fn save_image(grid: &FeatureGrid, path: &Path) -> Result<()> {
    check_channels(grid)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => save_ppm(grid, path),
        _ => save_png(grid, path),
    }
}

/// Load a PNG or ASCII PPM into a grid with 1 (gray) or 3 (RGB) channels.
pub fn load_image(path: &Path) -> Result<FeatureGrid> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => load_ppm(path),
        _ => load_png(path),
    }
}

/// Load an image and reduce it to a single channel (first channel wins),
/// for use as a metric mask.
pub fn load_mask(path: &Path) -> Result<FeatureGrid> {
    let img = load_image(path)?;
    if img.channels() == 1 {
        return Ok(img);
    }
    Ok(FeatureGrid::from_fn(img.height(), img.width(), 1, |i, j| vec![img.get(i, j)[0]]))
}

fn save_png(grid: &FeatureGrid, path: &Path) -> Result<()> {
    let (h, w) = grid.dims();
    if grid.channels() == 1 {
        let mut img = GrayImage::new(w as u32, h as u32);
        for i in 0..h {
            for j in 0..w {
                img.put_pixel(j as u32, i as u32, image::Luma([to_u8(grid.get(i, j)[0])]));
            }
        }
        img.save(path)?;
    } else {
        let mut img = RgbImage::new(w as u32, h as u32);
        for i in 0..h {
            for j in 0..w {
                let p = grid.get(i, j);
                img.put_pixel(
                    j as u32,
                    i as u32,
                    image::Rgb([to_u8(p[0]), to_u8(p[1]), to_u8(p[2])]),
                );
            }
        }
        img.save(path)?;
    }
    Ok(())
}

fn load_png(path: &Path) -> Result<FeatureGrid> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let img = reader.decode()?;
    Ok(match img {
        DynamicImage::ImageLuma8(gray) => {
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            FeatureGrid::from_fn(h, w, 1, |i, j| {
                vec![gray.get_pixel(j as u32, i as u32)[0] as f64 / 255.0]
            })
        }
        other => {
            let rgb = other.into_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            FeatureGrid::from_fn(h, w, 3, |i, j| {
                let p = rgb.get_pixel(j as u32, i as u32);
                (0..3).map(|c| p[c] as f64 / 255.0).collect()
            })
        }
    })
}

fn save_ppm(grid: &FeatureGrid, path: &Path) -> Result<()> {
    let (h, w) = grid.dims();
    let mut text = format!("P3\n{w} {h}\n255\n");
    for i in 0..h {
        for j in 0..w {
            let p = grid.get(i, j);
            let (r, g, b) = if grid.channels() == 1 {
                let v = to_u8(p[0]);
                (v, v, v)
            } else {
                (to_u8(p[0]), to_u8(p[1]), to_u8(p[2]))
            };
            text.push_str(&format!("{r} {g} {b}\n"));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_ppm(path: &Path) -> Result<FeatureGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("")) // strip comments
        .flat_map(|l| l.split_whitespace());
    let bad = |reason: &str| Error::MalformedLine { line: 0, reason: reason.to_string() };
    if tokens.next() != Some("P3") {
        return Err(bad("not an ASCII P3 file"));
    }
    let mut next_num = |what: &str| -> Result<u64> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(&format!("missing or invalid {what}")))
    };
    let w = next_num("width")? as usize;
    let h = next_num("height")? as usize;
    let maxval = next_num("max value")?;
    if maxval != 255 {
        return Err(bad("only 8-bit (max value 255) files are supported"));
    }
    let mut data = Vec::with_capacity(h * w * 3);
    for _ in 0..h * w * 3 {
        let v = next_num("sample")?;
        if v > 255 {
            return Err(bad("sample exceeds max value"));
        }
        data.push(v as f64 / 255.0);
    }
    FeatureGrid::from_vec(h, w, 3, data)
}
