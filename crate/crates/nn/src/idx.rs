//! IDX binary format (MNIST distribution files).

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },
    #[error("{path}: truncated, expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: usize, found: usize },
    #[error("{path}: {detail}")]
    DimensionMismatch { path: PathBuf, detail: String },
}

/// Unsigned-byte tensor: dimensions and row-major payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

/// Parses an in-memory IDX file with the expected magic number.
pub fn parse(bytes: &[u8], magic: u32, path: &Path) -> Result<IdxArray, IdxError> {
    let truncated = |expected: usize| IdxError::Truncated { path: path.into(), expected, found: bytes.len() };
    if bytes.len() < 4 {
        return Err(truncated(4));
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(IdxError::BadMagic { path: path.into(), expected: magic, found });
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(truncated(header));
    }
    let dims: Vec<usize> = (0..ndim).map(|k| be_u32(bytes, 4 + 4 * k) as usize).collect();
    let len: usize = dims.iter().product();
    if bytes.len() < header + len {
        return Err(truncated(header + len));
    }
    if bytes.len() > header + len {
        return Err(IdxError::DimensionMismatch {
            path: path.into(),
            detail: format!("{} trailing bytes after a {:?} payload", bytes.len() - header - len, dims),
        });
    }
    Ok(IdxArray { dims, data: bytes[header..].to_vec() })
}

pub fn read(path: &Path, magic: u32) -> Result<IdxArray, IdxError> {
    let bytes = fs::read(path).map_err(|source| IdxError::Io { path: path.into(), source })?;
    parse(&bytes, magic, path)
}

/// Reads an image/label file pair, checking that the counts agree.
pub fn read_pair(images: &Path, labels: &Path) -> Result<(IdxArray, IdxArray), IdxError> {
    let x = read(images, IMAGE_MAGIC)?;
    let y = read(labels, LABEL_MAGIC)?;
    if x.dims[0] != y.dims[0] {
        return Err(IdxError::DimensionMismatch {
            path: labels.into(),
            detail: format!("{} labels for {} images", y.dims[0], x.dims[0]),
        });
    }
    Ok((x, y))
}

#[cfg(test)]
pub(crate) fn encode(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out.extend(payload);
    out
}
