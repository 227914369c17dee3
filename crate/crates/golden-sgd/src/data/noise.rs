//! Test-time noise injection.
//!
//! Both procedures pick exactly floor(percent/100 · pixel_count) distinct
//! pixels per image, sampled without replacement (so the corruption
//! magnitude is deterministic, not Bernoulli-distributed). Grayscale noise
//! replaces a pixel by 255 − value; color noise inverts the HSI intensity
//! channel and converts back, leaving hue and saturation of untouched
//! pixels inside round-trip tolerance. Pixel sets are sampled independently
//! per image.

use super::hsi::{hsi_to_rgb, rgb_to_hsi};
use super::{DataError, Dataset, GrayImage, NoiseMode, NoiseSpec, RgbImage};
use crate::rng::{derive_seed, Rng};
use std::path::Path;

fn flip_count(percent: f64, pixel_count: usize) -> usize {
    debug_assert!((0.0..=100.0).contains(&percent));
    ((percent / 100.0) * pixel_count as f64).floor() as usize
}

/// Invert `floor(percent/100 · N)` uniformly chosen pixels of a grayscale
/// image: value ↦ 255 − value.
pub fn flip_noise(image: &GrayImage, percent: f64, seed: u64) -> GrayImage {
    let mut rng = Rng::new(seed);
    let k = flip_count(percent, image.pixels.len());
    let mut out = image.clone();
    for idx in rng.sample_indices(image.pixels.len(), k) {
        out.pixels[idx] = 255 - out.pixels[idx];
    }
    out
}

/// Convert to HSI, invert intensity (i ↦ 1 − i) on the selected pixel
/// fraction, convert back. The whole image passes through the color
/// round trip, selected or not.
pub fn hsi_intensity_noise(image: &RgbImage, percent: f64, seed: u64) -> RgbImage {
    let mut rng = Rng::new(seed);
    let n = image.height * image.width;
    let k = flip_count(percent, n);
    let selected = rng.sample_indices(n, k);
    let mut sel_iter = selected.iter().peekable();
    let mut out = image.clone();
    for p in 0..n {
        let px = [
            image.pixels[3 * p],
            image.pixels[3 * p + 1],
            image.pixels[3 * p + 2],
        ];
        let (h, s, mut i) = rgb_to_hsi(px);
        if sel_iter.peek() == Some(&&p) {
            sel_iter.next();
            i = 1.0 - i;
        }
        let rgb = hsi_to_rgb(h, s, i);
        out.pixels[3 * p..3 * p + 3].copy_from_slice(&rgb);
    }
    out
}

/// Apply a noise spec to a whole dataset. Only the test split may be
/// noised; each image gets an independently derived pixel set.
pub fn apply_noise(dataset: &Dataset, spec: &NoiseSpec) -> Result<Dataset, DataError> {
    if dataset.split != super::Split::Test {
        return Err(DataError::NoiseOnNonTestSplit(dataset.split));
    }
    if !(0.0..=100.0).contains(&spec.percent) {
        return Err(DataError::Domain(format!(
            "noise percent must lie in [0,100], got {}",
            spec.percent
        )));
    }
    match spec.mode {
        NoiseMode::PixelFlip => {
            let images = dataset
                .images
                .iter()
                .enumerate()
                .map(|(i, img)| flip_noise(img, spec.percent, derive_seed(spec.seed, i as u64)))
                .collect();
            Ok(Dataset {
                images,
                labels: dataset.labels.clone(),
                split: dataset.split,
                provenance: dataset.provenance,
            })
        }
        NoiseMode::HsiIntensity => Err(DataError::Domain(
            "datasets are grayscale; hsi-intensity-inversion applies to RGB images".into(),
        )),
    }
}

/// Write the audit manifest `{mode, percent, seed}` next to emitted images.
pub fn write_noise_manifest(dir: &Path, spec: &NoiseSpec) -> Result<(), DataError> {
    let json = serde_json::to_string_pretty(spec).expect("noise spec serializes");
    std::fs::write(dir.join("noise_manifest.json"), json + "\n")?;
    Ok(())
}
