//! Plain-text camera pose files.
//!
//! Each record is one whitespace-separated line of 19 numbers:
//!
//! ```text
//! timestamp  fx fy cx cy  u0 u1  r00 r01 r02 t0  r10 r11 r12 t1  r20 r21 r22 t2
//! ```
//!
//! Intrinsics are stored normalized by image width (fx, cx) and height
//! (fy, cy). `u0 u1` are carried through unchanged but otherwise unused. The
//! final 12 numbers are the row-major 3x4 world-to-camera transform. A first
//! line whose first token does not parse as a float is treated as a header
//! and skipped; blank lines are ignored.
//!
//! Serialization uses Rust's shortest round-trip float formatting, so a
//! serialize → parse cycle reproduces every field bit for bit.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{
    rotation_deviation, CameraExtrinsics, CameraIntrinsics, CameraView, ROTATION_TOLERANCE,
};

/// One parsed pose-file line.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub timestamp: f64,
    /// fx, fy, cx, cy normalized by image width/height.
    pub intrinsics: [f64; 4],
    /// Two reserved fields, preserved verbatim.
    pub unused: [f64; 2],
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    /// World-to-camera translation.
    pub translation: Vector3<f64>,
}

impl PoseRecord {
    /// Scale the normalized intrinsics up to pixels and assemble a validated
    /// camera for an image of the given size.
    pub fn to_view(&self, width: u32, height: u32, near: f64, far: f64) -> Result<CameraView> {
        let [fx, fy, cx, cy] = self.intrinsics;
        let intrinsics = CameraIntrinsics::new(
            fx * width as f64,
            fy * height as f64,
            cx * width as f64,
            cy * height as f64,
            width,
            height,
        )?;
        let extrinsics = CameraExtrinsics::new(self.rotation, self.translation)?;
        CameraView::new(intrinsics, extrinsics, near, far)
    }

    /// Inverse of [`PoseRecord::to_view`]: normalize the camera's pixel
    /// intrinsics by its image size.
    pub fn from_view(view: &CameraView, timestamp: f64) -> Self {
        let k = &view.intrinsics;
        let (w, h) = (k.width() as f64, k.height() as f64);
        PoseRecord {
            timestamp,
            intrinsics: [k.fx() / w, k.fy() / h, k.cx() / w, k.cy() / h],
            unused: [0.0, 0.0],
            rotation: *view.extrinsics.rotation(),
            translation: *view.extrinsics.translation(),
        }
    }
}

const FIELDS_PER_LINE: usize = 19;

/// Parse a pose file. Line numbers in errors are 1-based over the raw text,
/// header and blank lines included.
pub fn parse_pose_file(text: &str) -> Result<Vec<PoseRecord>> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().expect("non-empty line");
        if idx == 0 && first.parse::<f64>().is_err() {
            continue; // header line
        }
        let mut values = [0.0f64; FIELDS_PER_LINE];
        let mut count = 0;
        for token in line.split_whitespace() {
            if count == FIELDS_PER_LINE {
                count += 1; // too many fields; fall through to the arity error
                break;
            }
            let v: f64 = token.parse().map_err(|_| Error::MalformedLine {
                line: line_no,
                reason: format!("token {token:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedLine {
                    line: line_no,
                    reason: format!("non-finite value {token:?}"),
                });
            }
            values[count.min(FIELDS_PER_LINE - 1)] = v;
            count += 1;
        }
        if count != FIELDS_PER_LINE {
            return Err(Error::MalformedLine {
                line: line_no,
                reason: format!("expected {FIELDS_PER_LINE} fields, found {count}"),
            });
        }
        let rotation = Matrix3::new(
            values[7], values[8], values[9],
            values[11], values[12], values[13],
            values[15], values[16], values[17],
        );
        let deviation = rotation_deviation(&rotation);
        if !(deviation <= ROTATION_TOLERANCE) {
            return Err(Error::NonRigidRotation { line: line_no, deviation });
        }
        records.push(PoseRecord {
            timestamp: values[0],
            intrinsics: [values[1], values[2], values[3], values[4]],
            unused: [values[5], values[6]],
            rotation,
            translation: Vector3::new(values[10], values[14], values[18]),
        });
    }
    Ok(records)
}

/// Serialize records, one line each, optionally preceded by a header line.
pub fn serialize_pose_file(records: &[PoseRecord], header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(h);
        out.push('\n');
    }
    for r in records {
        let mut fields: Vec<f64> = Vec::with_capacity(FIELDS_PER_LINE);
        fields.push(r.timestamp);
        fields.extend_from_slice(&r.intrinsics);
        fields.extend_from_slice(&r.unused);
        for i in 0..3 {
            for j in 0..3 {
                fields.push(r.rotation[(i, j)]);
            }
            fields.push(r.translation[i]);
        }
        for (n, v) in fields.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}
