//! Binary weight dump, written by `init` and read by `train`.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! 8 bytes   magic "IBCIWTS1"
//! u32       header length H
//! H bytes   UTF-8 JSON header: {"shapes":[[rows,cols],..],"strategy":"..","seed":n,"dtype":"f64"}
//! per layer rows*cols f64 weights (row-major), then cols f64 biases
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::InitWeights;

pub const MAGIC: &[u8; 8] = b"IBCIWTS1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub shapes: Vec<(usize, usize)>,
    /// Strategy descriptor, e.g. `ibci-xavier-k3-a0.9;0.5;0.1`.
    pub strategy: String,
    /// Run seed the weights were initialized for.
    pub seed: u64,
    pub dtype: String,
}

pub fn encode(weights: &InitWeights, strategy: &str, seed: u64) -> Vec<u8> {
    let header = DumpHeader {
        shapes: weights.weights.iter().map(|w| w.dim()).collect(),
        strategy: strategy.to_string(),
        seed,
        dtype: "f64".into(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (w, b) in weights.weights.iter().zip(&weights.biases) {
        for &v in w.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in b.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(DumpHeader, InitWeights)> {
    let bad = |msg: String| Error::Format { path: path.to_path_buf(), msg };
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("not a weight dump (bad magic)".into()));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header".into()))?;
    let header: DumpHeader = serde_json::from_slice(body).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.dtype != "f64" {
        return Err(bad(format!("unsupported dtype {}", header.dtype)));
    }

    let mut floats = bytes[12 + hlen..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let expected: usize = header.shapes.iter().map(|&(r, c)| r * c + c).sum();
    if bytes.len() - 12 - hlen != expected * 8 {
        return Err(bad(format!(
            "payload is {} bytes, shapes need {}",
            bytes.len() - 12 - hlen,
            expected * 8
        )));
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for &(r, c) in &header.shapes {
        let w: Vec<f64> = floats.by_ref().take(r * c).collect();
        let b: Vec<f64> = floats.by_ref().take(c).collect();
        weights.push(Array2::from_shape_vec((r, c), w).expect("length checked"));
        biases.push(Array1::from(b));
    }
    Ok((header, InitWeights { weights, biases }))
}

pub fn write(path: impl AsRef<Path>, weights: &InitWeights, strategy: &str, seed: u64) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(weights, strategy, seed)).map_err(|e| Error::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<(DumpHeader, InitWeights)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
