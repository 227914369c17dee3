//! Dataset ingestion, synthetic fallback data, subsampling and the two
//! test-time noise procedures.

pub mod hsi;
pub mod idx;
pub mod noise;
pub mod synthetic;

use crate::nn::Tensor;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("noise must be applied to the test split, got {0:?}")]
    NoiseOnNonTestSplit(Split),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    IdxFile,
    Synthetic,
}

/// Grayscale 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> GrayImage {
        assert_eq!(pixels.len(), height * width);
        GrayImage {
            height,
            width,
            pixels,
        }
    }
}

/// Interleaved RGB 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> RgbImage {
        assert_eq!(pixels.len(), 3 * height * width);
        RgbImage {
            height,
            width,
            pixels,
        }
    }
}

/// Labeled grayscale images with split and provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<GrayImage>,
    pub labels: Vec<u8>,
    pub split: Split,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        images: Vec<GrayImage>,
        labels: Vec<u8>,
        split: Split,
        provenance: Provenance,
    ) -> Result<Dataset, DataError> {
        if images.len() != labels.len() {
            return Err(DataError::Consistency(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        Ok(Dataset {
            images,
            labels,
            split,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Occurrences of each class 0..=9.
    pub fn class_counts(&self) -> [usize; 10] {
        let mut counts = [0usize; 10];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn with_split(mut self, split: Split) -> Dataset {
        self.split = split;
        self
    }

    /// Dataset restricted to `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            split: self.split,
            provenance: self.provenance,
        }
    }
}

/// Map 8-bit intensities into [−1, 1] via x/127.5 − 1 and pack the listed
/// images as an (N, 1, H, W) batch.
pub fn normalize_to_pm1(dataset: &Dataset, indices: &[usize]) -> Tensor {
    assert!(!indices.is_empty(), "empty batch");
    let (h, w) = (dataset.images[indices[0]].height, dataset.images[indices[0]].width);
    let mut t = Tensor::zeros(&[indices.len(), 1, h, w]);
    let data = t.data_mut();
    for (bi, &i) in indices.iter().enumerate() {
        let img = &dataset.images[i];
        debug_assert_eq!((img.height, img.width), (h, w));
        for (dst, &px) in data[bi * h * w..(bi + 1) * h * w]
            .iter_mut()
            .zip(img.pixels.iter())
        {
            *dst = px as f64 / 127.5 - 1.0;
        }
    }
    t
}

/// Labels for the listed images as class indices.
pub fn batch_labels(dataset: &Dataset, indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| dataset.labels[i] as usize).collect()
}

/// Stratified subsample without replacement: every class keeps exactly
/// floor(fraction · class_count) items. `fraction = 1.0` is the identity
/// (original indices, original order).
pub fn subsample(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::Domain(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok(dataset.clone());
    }
    let mut rng = Rng::new(seed);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); 10];
    for (i, &l) in dataset.labels.iter().enumerate() {
        per_class[l as usize].push(i);
    }
    let mut keep = Vec::new();
    for (class, members) in per_class.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let k = (fraction * members.len() as f64).floor() as usize;
        if k == 0 {
            return Err(DataError::DegenerateSplit(format!(
                "class {class} would lose all {} members at fraction {fraction}",
                members.len()
            )));
        }
        for sel in rng.sample_indices(members.len(), k) {
            keep.push(members[sel]);
        }
    }
    keep.sort_unstable();
    Ok(dataset.select(&keep))
}

/// Which noise procedure to run; serialized names appear in all reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    /// Replace selected pixels by 255 − value.
    #[serde(rename = "pixel-flip")]
    PixelFlip,
    /// Invert the HSI intensity channel on selected pixels.
    /// Flagged as an inversion in every output because the noise
    /// distribution is our reading, not a quoted procedure.
    #[serde(rename = "hsi-intensity-inversion")]
    HsiIntensity,
}

/// A noise application: mode, pixel percentage and seed. Applies to the
/// test split only; per-image pixel sets are sampled independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub percent: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn pixel_flip(percent: f64, seed: u64) -> NoiseSpec {
        NoiseSpec {
            mode: NoiseMode::PixelFlip,
            percent,
            seed,
        }
    }
}
