//! Experiment configuration and dataset resolution.

use crate::data::idx::load_idx;
use crate::data::synthetic::synthetic_digits;
use crate::data::{Dataset, Split};
use crate::rng::{derive_seed, Rng};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

use super::HarnessError;

/// Environment variable pointing at a directory with the MNIST IDX files.
pub const DATA_ENV_VAR: &str = "GOLDEN_SGD_DATA";

/// The theoretically derived grid cell, detected for the Wilcoxon
/// comparison against the other top performers.
pub const PROPOSED_ETA: f64 = 0.016;
pub const PROPOSED_MOMENTUM: f64 = 0.874;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerKind::Sgd => write!(f, "sgd"),
            OptimizerKind::Adam => write!(f, "adam"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// IDX files when `dir` or the environment variable points at them,
    /// synthetic glyphs otherwise.
    #[default]
    Auto,
    Synthetic,
    Idx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub source: DataSource,
    /// IDX directory; falls back to the environment variable.
    pub dir: Option<PathBuf>,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        // desk-scale defaults; full MNIST scale is a config change
        DatasetConfig {
            source: DataSource::Auto,
            dir: None,
            train: 2000,
            val: 500,
            test: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub optimizer: OptimizerKind,
    pub eta_list: Vec<f64>,
    pub momentum_list: Vec<f64>,
    pub fractions: Vec<f64>,
    /// Number of repetitions; run r uses seed index r.
    pub seeds: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub master_seed: u64,
    pub dataset: DatasetConfig,
    pub noise_levels: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            optimizer: OptimizerKind::Sgd,
            eta_list: vec![0.0001, 0.001, 0.01, 0.016, 0.1, 0.2],
            momentum_list: vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.825, 0.85, 0.874, 0.9, 0.925],
            fractions: vec![1.0, 0.75, 0.5, 0.25],
            seeds: 5,
            epochs: 10,
            batch_size: 64,
            master_seed: 42,
            dataset: DatasetConfig::default(),
            noise_levels: vec![0.0, 5.0, 10.0],
        }
    }
}

impl ExperimentConfig {
    /// Parse from JSON; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.eta_list.is_empty() || self.momentum_list.is_empty() || self.fractions.is_empty() {
            return bad("eta_list, momentum_list and fractions must be non-empty".into());
        }
        if self.eta_list.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return bad("learning rates must be positive".into());
        }
        if self.momentum_list.iter().any(|&m| !(0.0..1.0).contains(&m)) {
            return bad("momentum values must lie in [0,1)".into());
        }
        if self.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return bad("fractions must lie in (0,1]".into());
        }
        if self.seeds == 0 || self.epochs == 0 || self.batch_size == 0 {
            return bad("seeds, epochs and batch_size must be at least 1".into());
        }
        if self.noise_levels.iter().any(|&p| !(0.0..=100.0).contains(&p)) {
            return bad("noise levels are percentages in [0,100]".into());
        }
        if self.dataset.train == 0 || self.dataset.val == 0 || self.dataset.test == 0 {
            return bad("dataset split sizes must be positive".into());
        }
        Ok(())
    }
}

/// The resolved train/val/test datasets for one experiment.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    /// Human-readable provenance note for report headers.
    pub source_note: String,
}

const KEY_SPLIT_SHUFFLE: u64 = 0x51;
const KEY_SYN_TRAIN: u64 = 0xA1;
const KEY_SYN_VAL: u64 = 0xA2;
const KEY_SYN_TEST: u64 = 0xA3;

fn idx_dir(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.dataset
        .dir
        .clone()
        .or_else(|| std::env::var_os(DATA_ENV_VAR).map(PathBuf::from))
}

fn idx_files_present(dir: &Path) -> bool {
    ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]
        .iter()
        .all(|f| dir.join(f).is_file())
}

/// Stratified, seeded 90/10 split of the loaded training file, then cut the
/// requested sizes from seeded shuffles so any prefix stays near-balanced.
fn split_idx_dataset(
    cfg: &ExperimentConfig,
    full_train: Dataset,
    full_test: Dataset,
) -> Result<SplitData, HarnessError> {
    let mut rng = Rng::new(derive_seed(cfg.master_seed, KEY_SPLIT_SHUFFLE));
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); 10];
    for (i, &l) in full_train.labels.iter().enumerate() {
        per_class[l as usize].push(i);
    }
    let mut train_pool = Vec::new();
    let mut val_pool = Vec::new();
    for members in per_class.iter_mut() {
        rng.shuffle(members);
        let n_val = members.len() / 10; // 60,000 → 54,000 + 6,000
        val_pool.extend_from_slice(&members[..n_val]);
        train_pool.extend_from_slice(&members[n_val..]);
    }
    rng.shuffle(&mut train_pool);
    rng.shuffle(&mut val_pool);

    let need = |pool: &Vec<usize>, n: usize, what: &str| -> Result<(), HarnessError> {
        if pool.len() < n {
            return Err(HarnessError::Config(format!(
                "{what} split needs {n} images, only {} available",
                pool.len()
            )));
        }
        Ok(())
    };
    need(&train_pool, cfg.dataset.train, "train")?;
    need(&val_pool, cfg.dataset.val, "val")?;

    let mut test_pool: Vec<usize> = (0..full_test.len()).collect();
    rng.shuffle(&mut test_pool);
    need(&test_pool, cfg.dataset.test, "test")?;

    Ok(SplitData {
        train: full_train.select(&train_pool[..cfg.dataset.train]).with_split(Split::Train),
        val: full_train.select(&val_pool[..cfg.dataset.val]).with_split(Split::Val),
        test: full_test.select(&test_pool[..cfg.dataset.test]).with_split(Split::Test),
        source_note: "idx-file".into(),
    })
}

fn synthetic_splits(cfg: &ExperimentConfig) -> Result<SplitData, HarnessError> {
    let seed = cfg.master_seed;
    Ok(SplitData {
        train: synthetic_digits(cfg.dataset.train, derive_seed(seed, KEY_SYN_TRAIN))?
            .with_split(Split::Train),
        val: synthetic_digits(cfg.dataset.val, derive_seed(seed, KEY_SYN_VAL))?
            .with_split(Split::Val),
        test: synthetic_digits(cfg.dataset.test, derive_seed(seed, KEY_SYN_TEST))?
            .with_split(Split::Test),
        source_note: "synthetic".into(),
    })
}

/// Resolve the dataset per config and environment. In `auto` mode, missing
/// IDX files fall back to synthetic glyphs; the note says which path was
/// taken so the CLI can log it.
pub fn resolve_dataset(cfg: &ExperimentConfig) -> Result<SplitData, HarnessError> {
    match cfg.dataset.source {
        DataSource::Synthetic => synthetic_splits(cfg),
        DataSource::Idx => {
            let dir = idx_dir(cfg).ok_or_else(|| {
                HarnessError::Config(format!(
                    "dataset.source is `idx` but no dataset.dir and no {DATA_ENV_VAR}"
                ))
            })?;
            load_idx_splits(cfg, &dir)
        }
        DataSource::Auto => match idx_dir(cfg) {
            Some(dir) if idx_files_present(&dir) => load_idx_splits(cfg, &dir),
            _ => synthetic_splits(cfg),
        },
    }
}

fn load_idx_splits(cfg: &ExperimentConfig, dir: &Path) -> Result<SplitData, HarnessError> {
    let train = load_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?;
    split_idx_dataset(cfg, train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_full_protocol_grid() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.eta_list.len(), 6);
        assert_eq!(cfg.momentum_list.len(), 10);
        assert_eq!(cfg.fractions, vec![1.0, 0.75, 0.5, 0.25]);
        assert_eq!(cfg.seeds, 5);
        assert_eq!(cfg.batch_size, 64);
        assert!(cfg.eta_list.contains(&PROPOSED_ETA));
        assert!(cfg.momentum_list.contains(&PROPOSED_MOMENTUM));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json(r#"{"epochs": 3, "turbo": true}"#).unwrap_err();
        assert!(err.to_string().contains("turbo"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"epochs": 3}"#).is_ok());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::default();
        let json = cfg.to_json_pretty();
        let back = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.eta_list = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.momentum_list = vec![1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.fractions = vec![0.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.seeds = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn synthetic_resolution_is_deterministic_and_split_tagged() {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.source = DataSource::Synthetic;
        cfg.dataset.train = 100;
        cfg.dataset.val = 50;
        cfg.dataset.test = 50;
        let a = resolve_dataset(&cfg).unwrap();
        let b = resolve_dataset(&cfg).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.train.split, Split::Train);
        assert_eq!(a.val.split, Split::Val);
        assert_eq!(a.test.split, Split::Test);
        // distinct split seeds give distinct data
        assert_ne!(a.train.images[0], a.val.images[0]);
    }

    #[test]
    fn idx_resolution_uses_ninety_ten_split() {
        use crate::data::idx::{write_idx_images, write_idx_labels};
        use crate::data::GrayImage;
        let dir = std::env::temp_dir().join(format!("gsgd-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        // 200 train images (20 per class), 60 test
        let imgs: Vec<GrayImage> = (0..200)
            .map(|i| GrayImage::new(28, 28, vec![(i % 251) as u8; 784]))
            .collect();
        let labels: Vec<u8> = (0..200).map(|i| (i % 10) as u8).collect();
        std::fs::write(dir.join("train-images-idx3-ubyte"), write_idx_images(&imgs)).unwrap();
        std::fs::write(dir.join("train-labels-idx1-ubyte"), write_idx_labels(&labels)).unwrap();
        let timgs: Vec<GrayImage> = (0..60)
            .map(|_| GrayImage::new(28, 28, vec![9; 784]))
            .collect();
        let tlabels: Vec<u8> = (0..60).map(|i| (i % 10) as u8).collect();
        std::fs::write(dir.join("t10k-images-idx3-ubyte"), write_idx_images(&timgs)).unwrap();
        std::fs::write(dir.join("t10k-labels-idx1-ubyte"), write_idx_labels(&tlabels)).unwrap();

        let mut cfg = ExperimentConfig::default();
        cfg.dataset.source = DataSource::Idx;
        cfg.dataset.dir = Some(dir.clone());
        cfg.dataset.train = 150;
        cfg.dataset.val = 20; // 10% of 200 = 20 available
        cfg.dataset.test = 60;
        let data = resolve_dataset(&cfg).unwrap();
        assert_eq!(data.train.len(), 150);
        assert_eq!(data.val.len(), 20);
        assert_eq!(data.test.len(), 60);
        assert_eq!(data.source_note, "idx-file");

        // asking for more validation data than the 10% pool holds fails
        cfg.dataset.val = 21;
        assert!(resolve_dataset(&cfg).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
