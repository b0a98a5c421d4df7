//! Binary container for feature grids.
//!
//! Layout, all little-endian: magic `QFEA`, format version `u16`, row count
//! `u32`, column count `u32`, axis code `u8`, then `rows * cols` `f32`
//! values in row-major order. Values survive a round trip exactly up to the
//! f64 -> f32 cast at write time; header fields survive exactly.

use std::path::Path;

use ndarray::Array2;

use crate::dsp::{AxisKind, SpectroMatrix};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"QFEA";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 15;

pub fn encode_feature(grid: &SpectroMatrix) -> Result<Vec<u8>> {
    let rows = grid.data.nrows();
    let cols = grid.data.ncols();
    if rows == 0 || cols == 0 {
        return Err(Error::Domain(format!(
            "refusing to write an empty {rows}x{cols} feature grid"
        )));
    }
    if rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(Error::Domain("feature grid exceeds u32 dimensions".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.push(grid.axis.code());
    for &v in grid.data.iter() {
        if v.abs() > f32::MAX as f64 {
            return Err(Error::Domain(format!(
                "feature value {v} does not fit in f32"
            )));
        }
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Decode a feature image. The payload must match the header exactly:
/// short payloads and trailing bytes are both corruption errors.
pub fn decode_feature(bytes: &[u8]) -> Result<SpectroMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("file too short for a feature header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("missing QFEA magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported feature-file version {version} (expected {VERSION})"
        )));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let axis = AxisKind::from_code(bytes[14])?;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty {rows}x{cols} feature grid")));
    }
    let expect = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("feature dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expect {
        return Err(Error::Corrupt(format!(
            "payload holds {} bytes, header promises {expect}",
            payload.len()
        )));
    }
    if payload.len() > expect {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes after payload",
            payload.len() - expect
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let data = Array2::from_shape_vec((rows, cols), values)
        .expect("length checked against rows * cols");
    SpectroMatrix::new(data, axis, 1.0, 0.0)
}

pub fn write_feature(path: &Path, grid: &SpectroMatrix) -> Result<()> {
    crate::fsio::write_bytes(path, encode_feature(grid)?)
}

pub fn read_feature(path: &Path) -> Result<SpectroMatrix> {
    decode_feature(&crate::fsio::read_bytes(path)?)
}
