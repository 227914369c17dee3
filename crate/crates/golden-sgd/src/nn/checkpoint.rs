//! Flat binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  b"GSGD"
//! u32    version (currently 1)
//! u32    tensor count
//! per tensor:
//!   u32      name length, then that many UTF-8 bytes
//!   u32      rank
//!   u64[r]   dims
//!   f64[n]   values, little-endian, n = product of dims
//! ```
//!
//! Round trips are bit-exact, including NaN payloads.

use super::model::Model;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"GSGD";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("checkpoint format error: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub dims: Vec<u64>,
    pub values: Vec<f64>,
}

impl CheckpointEntry {
    pub fn new(name: impl Into<String>, dims: &[usize], values: Vec<f64>) -> CheckpointEntry {
        let dims: Vec<u64> = dims.iter().map(|&d| d as u64).collect();
        debug_assert_eq!(
            dims.iter().product::<u64>() as usize,
            values.len(),
            "dims do not match value count"
        );
        CheckpointEntry {
            name: name.into(),
            dims,
            values,
        }
    }
}

pub fn write_checkpoint_bytes(entries: &[CheckpointEntry]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in entries {
        out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
        out.extend_from_slice(e.name.as_bytes());
        out.extend_from_slice(&(e.dims.len() as u32).to_le_bytes());
        for &d in &e.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in &e.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Format(format!(
                "truncated: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint_bytes(bytes: &[u8]) -> Result<Vec<CheckpointEntry>, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CheckpointError::Format("bad magic, expected GSGD".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Format(format!(
            "unsupported version {version}"
        )));
    }
    let count = r.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|e| CheckpointError::Format(format!("bad tensor name: {e}")))?;
        let rank = r.u32()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u64()?);
        }
        let numel: u64 = dims.iter().product();
        let mut values = Vec::with_capacity(numel as usize);
        for _ in 0..numel {
            values.push(r.f64()?);
        }
        entries.push(CheckpointEntry { name, dims, values });
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Format(format!(
            "{} trailing bytes after last tensor",
            bytes.len() - r.pos
        )));
    }
    Ok(entries)
}

pub fn write_checkpoint(path: &Path, entries: &[CheckpointEntry]) -> Result<(), CheckpointError> {
    Ok(fs::write(path, write_checkpoint_bytes(entries))?)
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<CheckpointEntry>, CheckpointError> {
    read_checkpoint_bytes(&fs::read(path)?)
}

/// Entries for every named parameter of a model, in parameter order.
pub fn model_entries(model: &Model) -> Vec<CheckpointEntry> {
    model
        .params()
        .into_iter()
        .map(|(name, t)| CheckpointEntry::new(name, t.shape(), t.data().to_vec()))
        .collect()
}

/// Load entries back into a model, matching strictly by name and shape.
pub fn load_into_model(model: &mut Model, entries: &[CheckpointEntry]) -> Result<(), CheckpointError> {
    let mut params = model.params_mut();
    if params.len() != entries.len() {
        return Err(CheckpointError::Format(format!(
            "checkpoint has {} tensors, model has {}",
            entries.len(),
            params.len()
        )));
    }
    for ((name, tensor), entry) in params.iter_mut().zip(entries) {
        if *name != entry.name {
            return Err(CheckpointError::Format(format!(
                "tensor name mismatch: checkpoint `{}`, model `{name}`",
                entry.name
            )));
        }
        let shape: Vec<u64> = tensor.shape().iter().map(|&d| d as u64).collect();
        if shape != entry.dims {
            return Err(CheckpointError::Format(format!(
                "shape mismatch for `{name}`: checkpoint {:?}, model {shape:?}",
                entry.dims
            )));
        }
        tensor.data_mut().copy_from_slice(&entry.values);
    }
    Ok(())
}
