//! Browser demo bindings: derived constants with the residual curve, an
//! interactive trainer on synthetic digits, and a pixel-flip noise preview.
//!
//! Every export returns JSON strings so the page needs no generated glue
//! beyond wasm-bindgen itself. The same functions compile and run natively,
//! which is how they are tested.

use golden_sgd::bayes;
use golden_sgd::data::noise::flip_noise;
use golden_sgd::data::synthetic::synthetic_digits;
use golden_sgd::data::{batch_labels, normalize_to_pm1, Dataset};
use golden_sgd::nn::model::{build_mnist_cnn, Model};
use golden_sgd::optim::{adam_step, sgd_step, AdamState, SgdState};
use golden_sgd::rng::{derive_seed, Rng};
use serde::Serialize;

#[cfg(target_arch = "wasm32")]
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Serialize)]
struct CurvePoint {
    p: f64,
    residual: f64,
}

#[derive(Serialize)]
struct ConstantsReport {
    golden: f64,
    alpha: f64,
    eta: f64,
    bisection_root: f64,
    curve: Vec<CurvePoint>,
}

/// Derived constants plus the inner-equation residual curve over (0,1).
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn constants_json() -> String {
    let curve = (1..200)
        .map(|i| {
            let p = i as f64 / 200.0;
            CurvePoint {
                p,
                residual: bayes::inner_residual(p).expect("p inside (0,1)"),
            }
        })
        .collect();
    serde_json::to_string(&ConstantsReport {
        golden: bayes::golden_ratio(),
        alpha: bayes::momentum_alpha(),
        eta: bayes::learning_eta(),
        bisection_root: bayes::solve_inner(),
        curve,
    })
    .expect("report serializes")
}

enum DemoOptimizer {
    Sgd(SgdState),
    Adam(AdamState),
}

/// Interactive trainer: the full digit CNN on a small synthetic dataset,
/// stepped one epoch per call so the page stays responsive.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub struct DemoTrainer {
    model: Model,
    optimizer: DemoOptimizer,
    train: Dataset,
    val: Dataset,
    test: Dataset,
    shuffle_rng: Rng,
    dropout_rng: Rng,
    epoch: usize,
    batch_size: usize,
}

#[derive(Serialize)]
struct EpochReport {
    epoch: usize,
    train_loss: f64,
    val_loss: f64,
    test_accuracy: f64,
    diverged: bool,
}

#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
impl DemoTrainer {
    /// `optimizer` is "sgd" or "adam"; `momentum` maps to β₁ for Adam.
    /// `train_n` synthetic digits are complemented by fixed-size val/test
    /// splits.
    #[cfg_attr(target_arch = "wasm32", wasm_bindgen(constructor))]
    pub fn new(
        optimizer: &str,
        eta: f64,
        momentum: f64,
        seed: u32,
        train_n: usize,
    ) -> Result<DemoTrainer, String> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err("learning rate must be positive".into());
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err("momentum must lie in [0, 1)".into());
        }
        let train_n = train_n.clamp(10, 2000);
        let seed = seed as u64;
        let train = synthetic_digits(train_n, derive_seed(seed, 1)).map_err(|e| e.to_string())?;
        let val = synthetic_digits(60, derive_seed(seed, 2)).map_err(|e| e.to_string())?;
        let test = synthetic_digits(120, derive_seed(seed, 3)).map_err(|e| e.to_string())?;
        let mut init_rng = Rng::new(derive_seed(seed, 4));
        let model = build_mnist_cnn(&mut init_rng);
        let optimizer = match optimizer {
            "sgd" => DemoOptimizer::Sgd(SgdState::new(eta, momentum, &model.params())),
            "adam" => DemoOptimizer::Adam(AdamState::new(eta, momentum, &model.params())),
            other => return Err(format!("unknown optimizer `{other}`")),
        };
        Ok(DemoTrainer {
            model,
            optimizer,
            train,
            val,
            test,
            shuffle_rng: Rng::new(derive_seed(seed, 5)),
            dropout_rng: Rng::new(derive_seed(seed, 6)),
            epoch: 0,
            batch_size: 32,
        })
    }

    /// SGD with the derived η = (1−α)² and α = √2·φ.
    pub fn theoretical(seed: u32, train_n: usize) -> Result<DemoTrainer, String> {
        DemoTrainer::new(
            "sgd",
            bayes::learning_eta(),
            bayes::momentum_alpha(),
            seed,
            train_n,
        )
    }

    /// Run one epoch and report losses plus test accuracy as JSON.
    pub fn epoch(&mut self) -> String {
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        self.shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut diverged = false;
        for chunk in order.chunks(self.batch_size) {
            let x = normalize_to_pm1(&self.train, chunk);
            let labels = batch_labels(&self.train, chunk);
            let loss = self
                .model
                .loss_and_backward(&x, &labels, &mut self.dropout_rng, true)
                .expect("model shapes are fixed");
            let step = {
                let mut params = self.model.params_mut();
                match &mut self.optimizer {
                    DemoOptimizer::Sgd(s) => sgd_step(&mut params, s),
                    DemoOptimizer::Adam(s) => adam_step(&mut params, s),
                }
            };
            if !loss.is_finite() || step.is_err() {
                diverged = true;
                break;
            }
            loss_sum += loss * chunk.len() as f64;
        }
        self.epoch += 1;
        let report = if diverged {
            EpochReport {
                epoch: self.epoch,
                train_loss: f64::NAN,
                val_loss: f64::NAN,
                test_accuracy: 0.0,
                diverged: true,
            }
        } else {
            EpochReport {
                epoch: self.epoch,
                train_loss: loss_sum / self.train.len() as f64,
                val_loss: self.eval_loss(),
                test_accuracy: self.test_accuracy(),
                diverged: false,
            }
        };
        // non-finite losses serialize as JSON null; the page reads the
        // diverged flag instead
        serde_json::to_string(&report).expect("report serializes")
    }

    fn eval_loss(&self) -> f64 {
        let idx: Vec<usize> = (0..self.val.len()).collect();
        let mut sum = 0.0;
        for chunk in idx.chunks(self.batch_size) {
            let x = normalize_to_pm1(&self.val, chunk);
            let labels = batch_labels(&self.val, chunk);
            sum += self.model.loss(&x, &labels).expect("shapes fixed") * chunk.len() as f64;
        }
        sum / self.val.len() as f64
    }

    fn test_accuracy(&self) -> f64 {
        let idx: Vec<usize> = (0..self.test.len()).collect();
        let mut correct = 0usize;
        for chunk in idx.chunks(self.batch_size) {
            let x = normalize_to_pm1(&self.test, chunk);
            let labels = batch_labels(&self.test, chunk);
            let preds = self.model.predict(&x).expect("shapes fixed");
            correct += preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
        }
        correct as f64 / self.test.len() as f64
    }
}

#[derive(Serialize)]
struct NoisePreview {
    width: usize,
    height: usize,
    label: u8,
    percent: f64,
    changed_pixels: usize,
    clean: Vec<u8>,
    noised: Vec<u8>,
}

/// One synthetic digit before and after pixel-flip noise.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn noise_preview_json(percent: f64, seed: u32, index: u32) -> Result<String, String> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(format!("percent must lie in [0,100], got {percent}"));
    }
    let pool = synthetic_digits(100, derive_seed(seed as u64, 0xD1617)).map_err(|e| e.to_string())?;
    let i = index as usize % pool.len();
    let clean = pool.images[i].clone();
    let noised = flip_noise(&clean, percent, derive_seed(seed as u64, i as u64));
    let changed = clean
        .pixels
        .iter()
        .zip(&noised.pixels)
        .filter(|(a, b)| a != b)
        .count();
    serde_json::to_string(&NoisePreview {
        width: clean.width,
        height: clean.height,
        label: pool.labels[i],
        percent,
        changed_pixels: changed,
        clean: clean.pixels,
        noised: noised.pixels,
    })
    .map_err(|e| e.to_string())
}
