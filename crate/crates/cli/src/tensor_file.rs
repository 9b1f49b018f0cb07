//! Binary tensor files.
//!
//! Layout, all little-endian: `b"ATNS"`, `u16` version (1), `u16` ndim,
//! `ndim x u64` dims, then `2 * prod(dims)` `f64` values as interleaved
//! (re, im) pairs in row-major element order.

use std::fs;
use std::path::Path;

use kspace_core::{Complex64, DenseTensor, Shape};

pub const MAGIC: &[u8; 4] = b"ATNS";
pub const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TensorFileError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated header: {have} bytes, need {need}")]
    TruncatedHeader { have: usize, need: usize },
    #[error("payload is {have} bytes but header dims {dims:?} require {need}")]
    PayloadMismatch { have: usize, need: usize, dims: Vec<u64> },
    #[error("invalid dims {0:?}")]
    InvalidDims(Vec<u64>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode(t: &DenseTensor) -> Vec<u8> {
    let dims = t.dims();
    let mut out = Vec::with_capacity(8 + 8 * dims.len() + 16 * t.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u16).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for z in t.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<DenseTensor, TensorFileError> {
    if bytes.len() < 8 {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(TensorFileError::BadMagic);
        }
        return Err(TensorFileError::TruncatedHeader { have: bytes.len(), need: 8 });
    }
    if &bytes[..4] != MAGIC {
        return Err(TensorFileError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(TensorFileError::UnsupportedVersion(version));
    }
    let ndim = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let header = 8 + 8 * ndim;
    if bytes.len() < header {
        return Err(TensorFileError::TruncatedHeader { have: bytes.len(), need: header });
    }
    let dims: Vec<u64> = bytes[8..header]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let need = dims
        .iter()
        .try_fold(16u64, |acc, &d| acc.checked_mul(d))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| TensorFileError::InvalidDims(dims.clone()))?;
    let payload = &bytes[header..];
    if payload.len() != need {
        return Err(TensorFileError::PayloadMismatch { have: payload.len(), need, dims });
    }
    let shape = Shape::new(dims.iter().map(|&d| d as usize).collect::<Vec<_>>())
        .map_err(|_| TensorFileError::InvalidDims(dims.clone()))?;
    let data = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(DenseTensor::from_vec(shape, data).expect("payload length checked against dims"))
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<(), TensorFileError> {
    fs::write(path, encode(t))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor, TensorFileError> {
    decode(&fs::read(path)?)
}
