//! IDX container parsing (the MNIST distribution format).
//!
//! Big-endian magic and dimension fields: 0x00000803 for u8 image cubes,
//! 0x00000801 for u8 label vectors. Intensities pass through unchanged.

use super::{DataError, Dataset, GrayImage, Provenance, Split};
use std::fs;
use std::path::Path;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], pos: usize, what: &str) -> Result<u32, DataError> {
    let slice = bytes
        .get(pos..pos + 4)
        .ok_or_else(|| DataError::Truncation(format!("{what}: file ends inside header")))?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Parse an IDX image file into (height, width, pixel planes).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<u8>>), DataError> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGE_MAGIC {
        return Err(DataError::Format(format!(
            "bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let height = be_u32(bytes, 8, "images")? as usize;
    let width = be_u32(bytes, 12, "images")? as usize;
    let expected = 16 + count * height * width;
    if bytes.len() < expected {
        return Err(DataError::Truncation(format!(
            "image payload holds {} bytes, header promises {expected}",
            bytes.len()
        )));
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * height * width;
        images.push(bytes[start..start + height * width].to_vec());
    }
    Ok((height, width, images))
}

/// Parse an IDX label file into class bytes.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABEL_MAGIC {
        return Err(DataError::Format(format!(
            "bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(DataError::Truncation(format!(
            "label payload holds {} bytes, header promises {expected}",
            bytes.len()
        )));
    }
    Ok(bytes[8..8 + count].to_vec())
}

/// Load a paired image/label IDX file set.
pub fn load_idx(image_path: &Path, label_path: &Path) -> Result<Dataset, DataError> {
    let (height, width, planes) = parse_idx_images(&fs::read(image_path)?)?;
    let labels = parse_idx_labels(&fs::read(label_path)?)?;
    if planes.len() != labels.len() {
        return Err(DataError::Consistency(format!(
            "{} images but {} labels",
            planes.len(),
            labels.len()
        )));
    }
    let images = planes
        .into_iter()
        .map(|p| GrayImage::new(height, width, p))
        .collect();
    Dataset::new(images, labels, Split::Train, Provenance::IdxFile)
}

/// Serialize images back into the IDX container (fixtures and audits).
pub fn write_idx_images(images: &[GrayImage]) -> Vec<u8> {
    let (h, w) = images
        .first()
        .map(|i| (i.height, i.width))
        .unwrap_or((0, 0));
    let mut out = Vec::with_capacity(16 + images.len() * h * w);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(h as u32).to_be_bytes());
    out.extend_from_slice(&(w as u32).to_be_bytes());
    for img in images {
        debug_assert_eq!((img.height, img.width), (h, w));
        out.extend_from_slice(&img.pixels);
    }
    out
}

/// Serialize labels into the IDX container.
pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
