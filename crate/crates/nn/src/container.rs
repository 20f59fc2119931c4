//! Versioned binary container for trained weights.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"FXBW"  u32 version  u32 tensor_count
//! per tensor: u32 ndim, ndim × u32 dims, product(dims) × f32 row-major
//! ```
//!
//! An MLP is stored as four tensors: `w1` (inputs × hidden), `b1`, `w2`
//! (hidden × outputs), `b2`.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::mlp::Mlp;

pub const MAGIC: &[u8; 4] = b"FXBW";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed weights container: {0}")]
    Format(String),
}

fn fmt(msg: impl Into<String>) -> ContainerError {
    ContainerError::Format(msg.into())
}

pub fn to_bytes(m: &Mlp) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.extend(VERSION.to_le_bytes());
    out.extend(4u32.to_le_bytes());
    let mut push = |dims: &[usize], data: &mut dyn Iterator<Item = f32>| {
        out.extend((dims.len() as u32).to_le_bytes());
        for &d in dims {
            out.extend((d as u32).to_le_bytes());
        }
        for v in data {
            out.extend(v.to_le_bytes());
        }
    };
    push(m.w1.shape(), &mut m.w1.iter().copied());
    push(m.b1.shape(), &mut m.b1.iter().copied());
    push(m.w2.shape(), &mut m.w2.iter().copied());
    push(m.b2.shape(), &mut m.b2.iter().copied());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ContainerError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| fmt("truncated"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn tensor(&mut self) -> Result<(Vec<usize>, Vec<f32>), ContainerError> {
        let ndim = self.u32()? as usize;
        let dims = (0..ndim).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let len = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| fmt("tensor size overflows"))?;
        let raw = self.take(len.checked_mul(4).ok_or_else(|| fmt("tensor size overflows"))?)?;
        Ok((dims, raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Mlp, ContainerError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(fmt("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(fmt(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    if count != 4 {
        return Err(fmt(format!("expected 4 tensors, found {count}")));
    }
    let matrix = |(dims, data): (Vec<usize>, Vec<f32>)| match dims[..] {
        [a, b] => Ok(Array2::from_shape_vec((a, b), data).expect("length checked")),
        _ => Err(fmt(format!("expected a matrix, found dims {dims:?}"))),
    };
    let vector = |(dims, data): (Vec<usize>, Vec<f32>)| match dims[..] {
        [_] => Ok(Array1::from(data)),
        _ => Err(fmt(format!("expected a vector, found dims {dims:?}"))),
    };
    let w1 = matrix(r.tensor()?)?;
    let b1 = vector(r.tensor()?)?;
    let w2 = matrix(r.tensor()?)?;
    let b2 = vector(r.tensor()?)?;
    if r.at != bytes.len() {
        return Err(fmt(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    if w1.ncols() != b1.len() || w2.nrows() != b1.len() || w2.ncols() != b2.len() {
        return Err(fmt("inconsistent layer shapes"));
    }
    Ok(Mlp { w1, b1, w2, b2 })
}

/// Writes atomically: the file appears complete or not at all.
pub fn save(path: &Path, m: &Mlp) -> Result<(), ContainerError> {
    let io = |source| ContainerError::Io { path: path.into(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(&to_bytes(m)).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Mlp, ContainerError> {
    let bytes = std::fs::read(path).map_err(|source| ContainerError::Io { path: path.into(), source })?;
    from_bytes(&bytes)
}
