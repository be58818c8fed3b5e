//! Projection and injection weights, with a flat binary serialization.
//!
//! On-disk container layout:
//!
//! ```text
//! bytes 0..4    magic "PSWB"
//! bytes 4..8    u32 little-endian JSON header length L
//! bytes 8..8+L  UTF-8 JSON header: version, channels, dk, tensor table
//! remainder     little-endian f32 payload, tensors concatenated row-major
//!               in table order
//! ```
//!
//! Weights are held in f64 in memory; the container stores f32, so a
//! save/load/save cycle is byte-stable after the first narrowing.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PSWB";

/// Depthwise-separable convolution weights: one 3x3 kernel per channel plus
/// a pointwise channel-mixing matrix (`out x in`, square).
#[derive(Debug, Clone, PartialEq)]
pub struct DscWeights {
    pub depthwise: Vec<[f64; 9]>,
    pub pointwise: DMatrix<f64>,
}

impl DscWeights {
    pub fn channels(&self) -> usize {
        self.depthwise.len()
    }

    /// Delta depthwise kernels + identity pointwise: the identity operator.
    pub fn identity(channels: usize) -> Self {
        let mut k = [0.0; 9];
        k[4] = 1.0;
        DscWeights { depthwise: vec![k; channels], pointwise: DMatrix::identity(channels, channels) }
    }

    fn validate(&self) -> Result<()> {
        let c = self.depthwise.len();
        if self.pointwise.nrows() != c || self.pointwise.ncols() != c || c == 0 {
            return Err(Error::MalformedWeights {
                reason: format!(
                    "dsc pointwise {}x{} does not match {} depthwise kernels",
                    self.pointwise.nrows(),
                    self.pointwise.ncols(),
                    c
                ),
            });
        }
        Ok(())
    }
}

/// Query/key/value projections plus the two injection-stage convolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    /// `channels x dk`.
    pub wq: DMatrix<f64>,
    pub wk: DMatrix<f64>,
    pub wv: DMatrix<f64>,
    /// Injection weights for the 2x and 4x upsampled stages; sized for the
    /// attention output (`dk` channels).
    pub dsc_2x: DscWeights,
    pub dsc_4x: DscWeights,
}

impl ProjectionWeights {
    pub fn channels(&self) -> usize {
        self.wq.nrows()
    }

    pub fn dk(&self) -> usize {
        self.wq.ncols()
    }

    /// Deterministic pseudo-random weights from a fixed seed. Entries are
    /// uniform in `[-1, 1] / sqrt(fan_in)`; the same `(channels, dk, seed)`
    /// triple always yields the same bundle.
    pub fn seeded(channels: usize, dk: usize, seed: u64) -> Self {
        assert!(channels > 0 && dk > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = |rows: usize, cols: usize, scale: f64| {
            DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0) * scale)
        };
        let sc = 1.0 / (channels as f64).sqrt();
        let wq = mat(channels, dk, sc);
        let wk = mat(channels, dk, sc);
        let wv = mat(channels, dk, sc);
        let mut dsc = |c: usize| {
            let depthwise = (0..c)
                .map(|_| {
                    let mut k = [0.0; 9];
                    for v in &mut k {
                        *v = rng.gen_range(-1.0..1.0) / 3.0;
                    }
                    k
                })
                .collect();
            let pointwise = DMatrix::from_fn(c, c, |_, _| rng.gen_range(-1.0..1.0) / (c as f64).sqrt());
            DscWeights { depthwise, pointwise }
        };
        let dsc_2x = dsc(dk);
        let dsc_4x = dsc(dk);
        ProjectionWeights { wq, wk, wv, dsc_2x, dsc_4x }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.wq.nrows();
        let dk = self.wq.ncols();
        if c == 0 || dk == 0 {
            return Err(Error::MalformedWeights { reason: "empty projection matrices".into() });
        }
        for (name, m) in [("wk", &self.wk), ("wv", &self.wv)] {
            if m.nrows() != c || m.ncols() != dk {
                return Err(Error::MalformedWeights {
                    reason: format!("{name} is {}x{}, expected {c}x{dk}", m.nrows(), m.ncols()),
                });
            }
        }
        self.dsc_2x.validate()?;
        self.dsc_4x.validate()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let c = self.channels();
        let dk = self.dk();
        let header = Header {
            version: 1,
            channels: c,
            dk,
            tensors: tensor_table(c, dk),
        };
        let header_json = serde_json::to_vec(&header)?;

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&header_json);
        let mut push = |v: f64| out.extend_from_slice(&(v as f32).to_le_bytes());
        for m in [&self.wq, &self.wk, &self.wv] {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    push(m[(i, j)]);
                }
            }
        }
        for dsc in [&self.dsc_2x, &self.dsc_4x] {
            for k in &dsc.depthwise {
                for &v in k {
                    push(v);
                }
            }
            for i in 0..dsc.pointwise.nrows() {
                for j in 0..dsc.pointwise.ncols() {
                    push(dsc.pointwise[(i, j)]);
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[0..4] != MAGIC {
            return Err(Error::MalformedWeights { reason: "bad magic".into() });
        }
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = bytes
            .get(8..8 + hlen)
            .ok_or_else(|| Error::MalformedWeights { reason: "truncated header".into() })?;
        let header: Header = serde_json::from_slice(body)?;
        if header.version != 1 {
            return Err(Error::MalformedWeights {
                reason: format!("unsupported container version {}", header.version),
            });
        }
        let (c, dk) = (header.channels, header.dk);
        if c == 0 || dk == 0 {
            return Err(Error::MalformedWeights { reason: "zero channels or dk".into() });
        }
        if header.tensors != tensor_table(c, dk) {
            return Err(Error::MalformedWeights { reason: "unexpected tensor table".into() });
        }
        let payload = &bytes[8 + hlen..];
        let expected = 3 * c * dk + 2 * (dk * 9 + dk * dk);
        if payload.len() != expected * 4 {
            return Err(Error::MalformedWeights {
                reason: format!("payload holds {} bytes, expected {}", payload.len(), expected * 4),
            });
        }
        let mut floats = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64);
        let mut take_mat = |rows: usize, cols: usize| {
            let mut m = DMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = floats.next().expect("length checked above");
                }
            }
            m
        };
        let wq = take_mat(c, dk);
        let wk = take_mat(c, dk);
        let wv = take_mat(c, dk);
        let mut take_dsc = |ch: usize| {
            let depthwise = (0..ch)
                .map(|_| {
                    let mut k = [0.0; 9];
                    for v in &mut k {
                        *v = floats.next().expect("length checked above");
                    }
                    k
                })
                .collect();
            let mut pointwise = DMatrix::zeros(ch, ch);
            for i in 0..ch {
                for j in 0..ch {
                    pointwise[(i, j)] = floats.next().expect("length checked above");
                }
            }
            DscWeights { depthwise, pointwise }
        };
        let dsc_2x = take_dsc(dk);
        let dsc_4x = take_dsc(dk);
        let w = ProjectionWeights { wq, wk, wv, dsc_2x, dsc_4x };
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::io(path, e))?
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Header {
    version: u32,
    channels: usize,
    dk: usize,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

fn tensor_table(c: usize, dk: usize) -> Vec<TensorEntry> {
    let t = |name: &str, shape: Vec<usize>| TensorEntry { name: name.to_string(), shape };
    vec![
        t("wq", vec![c, dk]),
        t("wk", vec![c, dk]),
        t("wv", vec![c, dk]),
        t("dsc2_depthwise", vec![dk, 3, 3]),
        t("dsc2_pointwise", vec![dk, dk]),
        t("dsc4_depthwise", vec![dk, 3, 3]),
        t("dsc4_pointwise", vec![dk, dk]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = ProjectionWeights::seeded(3, 4, 99);
        let b = ProjectionWeights::seeded(3, 4, 99);
        assert_eq!(a, b);
        let c = ProjectionWeights::seeded(3, 4, 100);
        assert_ne!(a, c, "different seeds must give different weights");
        assert_eq!(a.channels(), 3);
        assert_eq!(a.dk(), 4);
        assert_eq!(a.dsc_2x.channels(), 4);
    }

    #[test]
    fn container_round_trip_is_byte_stable() {
        let w = ProjectionWeights::seeded(3, 3, 7);
        let bytes1 = w.to_bytes().unwrap();
        let reloaded = ProjectionWeights::from_bytes(&bytes1).unwrap();
        let bytes2 = reloaded.to_bytes().unwrap();
        assert_eq!(bytes1, bytes2, "save/load/save must be byte-identical");
        // And the reloaded weights round-trip exactly (already f32-narrowed).
        assert_eq!(ProjectionWeights::from_bytes(&bytes2).unwrap(), reloaded);
    }

    #[test]
    fn container_rejects_corruption() {
        let w = ProjectionWeights::seeded(2, 2, 1);
        let bytes = w.to_bytes().unwrap();
        // Bad magic.
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ProjectionWeights::from_bytes(&bad), Err(Error::MalformedWeights { .. })));
        // Truncated payload.
        let short = &bytes[..bytes.len() - 4];
        assert!(ProjectionWeights::from_bytes(short).is_err());
        // Header length pointing past the end.
        let mut overrun = bytes.clone();
        overrun[4..8].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(ProjectionWeights::from_bytes(&overrun).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.pswb");
        let w = ProjectionWeights::seeded(4, 4, 3);
        w.save(&path).unwrap();
        let r = ProjectionWeights::load(&path).unwrap();
        assert_eq!(r.to_bytes().unwrap(), w.to_bytes().unwrap());
    }

    #[test]
    fn header_is_json_with_shape_table() {
        let w = ProjectionWeights::seeded(2, 3, 5);
        let bytes = w.to_bytes().unwrap();
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + hlen]).unwrap();
        assert_eq!(header["channels"], 2);
        assert_eq!(header["dk"], 3);
        assert_eq!(header["tensors"][0]["name"], "wq");
        assert_eq!(header["tensors"][0]["shape"], serde_json::json!([2, 3]));
    }
}
