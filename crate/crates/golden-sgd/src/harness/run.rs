//! Training runs: one grid cell at a time, or the whole grid on a worker
//! pool.
//!
//! Each run derives its random streams from
//! hash(master_seed, eta_idx, momentum_idx, fraction_idx, seed_idx), so
//! adding cells or reordering the schedule never perturbs existing runs,
//! and results are invariant to the number of workers. The subsampled
//! training set depends only on (master_seed, fraction_idx, seed_idx), so
//! every cell of a fraction × seed pair trains on identical data.

use super::config::{ExperimentConfig, OptimizerKind, SplitData};
use super::HarnessError;
use crate::data::{batch_labels, normalize_to_pm1, subsample, Dataset};
use crate::nn::checkpoint::{model_entries, write_checkpoint};
use crate::nn::model::{build_mnist_cnn, Model};
use crate::optim::{adam_step, sgd_step, AdamState, SgdState};
use crate::rng::{derive_seed, Rng};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

const KEY_RUN: u64 = 0x01;
const KEY_SUBSAMPLE: u64 = 0x02;
const KEY_INIT: u64 = 0x10;
const KEY_SHUFFLE: u64 = 0x11;
const KEY_DROPOUT: u64 = 0x12;

/// One grid cell: optimizer and hyperparameters plus their list indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub optimizer: OptimizerKind,
    pub eta: f64,
    pub momentum: f64,
    pub fraction: f64,
    pub eta_idx: usize,
    pub momentum_idx: usize,
    pub fraction_idx: usize,
}

/// Result of one (cell, seed) training run.
///
/// Wall-clock time is informational only and deliberately not serialized:
/// `runs.jsonl` must be byte-identical across repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub optimizer: OptimizerKind,
    pub eta: f64,
    pub momentum: f64,
    pub fraction: f64,
    pub eta_idx: usize,
    pub momentum_idx: usize,
    pub fraction_idx: usize,
    pub seed_idx: usize,
    pub run_seed: u64,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub min_val_loss: Option<f64>,
    pub min_val_epoch: Option<usize>,
    /// Test accuracy at the min-validation-loss checkpoint; 0 when diverged.
    pub test_accuracy: f64,
    pub diverged: bool,
    /// Checkpoint file name inside the runs directory, when one was saved.
    pub checkpoint: Option<String>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl RunRecord {
    pub fn checkpoint_name(cell: &CellSpec, seed_idx: usize) -> String {
        format!(
            "run-{}-f{}-e{}-m{}-s{}.gsgd",
            cell.optimizer, cell.fraction_idx, cell.eta_idx, cell.momentum_idx, seed_idx
        )
    }
}

/// The per-run stream seed.
pub fn derive_run_seed(master: u64, cell: &CellSpec, seed_idx: usize) -> u64 {
    let mut s = derive_seed(master, KEY_RUN);
    s = derive_seed(s, cell.eta_idx as u64);
    s = derive_seed(s, cell.momentum_idx as u64);
    s = derive_seed(s, cell.fraction_idx as u64);
    derive_seed(s, seed_idx as u64)
}

fn subsample_seed(master: u64, fraction_idx: usize, seed_idx: usize) -> u64 {
    let mut s = derive_seed(master, KEY_SUBSAMPLE);
    s = derive_seed(s, fraction_idx as u64);
    derive_seed(s, seed_idx as u64)
}

enum Optimizer {
    Sgd(SgdState),
    Adam(AdamState),
}

impl Optimizer {
    fn step(&mut self, model: &mut Model) -> Result<(), crate::optim::OptimError> {
        let mut params = model.params_mut();
        match self {
            Optimizer::Sgd(s) => sgd_step(&mut params, s),
            Optimizer::Adam(s) => adam_step(&mut params, s),
        }
    }
}

/// Sample-mean cross-entropy over a whole dataset in evaluation mode.
pub fn eval_loss(model: &Model, ds: &Dataset, batch_size: usize) -> f64 {
    let indices: Vec<usize> = (0..ds.len()).collect();
    let mut sum = 0.0;
    for chunk in indices.chunks(batch_size) {
        let x = normalize_to_pm1(ds, chunk);
        let labels = batch_labels(ds, chunk);
        sum += model.loss(&x, &labels).expect("shapes fixed by model spec") * chunk.len() as f64;
    }
    sum / ds.len() as f64
}

/// Classification accuracy over a whole dataset.
pub fn accuracy(model: &Model, ds: &Dataset, batch_size: usize) -> f64 {
    let indices: Vec<usize> = (0..ds.len()).collect();
    let mut correct = 0usize;
    for chunk in indices.chunks(batch_size) {
        let x = normalize_to_pm1(ds, chunk);
        let labels = batch_labels(ds, chunk);
        let preds = model.predict(&x).expect("shapes fixed by model spec");
        correct += preds
            .iter()
            .zip(labels.iter())
            .filter(|(p, l)| p == l)
            .count();
    }
    correct as f64 / ds.len() as f64
}

/// Train one (cell, seed) run. Deterministic given (config, cell, seed_idx).
/// Divergence (non-finite loss or gradient) marks the record and keeps the
/// epochs completed so far; the record is returned, never dropped.
pub fn run_cell(
    cell: &CellSpec,
    seed_idx: usize,
    cfg: &ExperimentConfig,
    data: &SplitData,
    checkpoint_dir: Option<&Path>,
) -> RunRecord {
    let started = Instant::now();
    let run_seed = derive_run_seed(cfg.master_seed, cell, seed_idx);
    let streams = Rng::new(run_seed);
    let mut init_rng = streams.derive(KEY_INIT);
    let mut shuffle_rng = streams.derive(KEY_SHUFFLE);
    let mut dropout_rng = streams.derive(KEY_DROPOUT);

    let mut record = RunRecord {
        optimizer: cell.optimizer,
        eta: cell.eta,
        momentum: cell.momentum,
        fraction: cell.fraction,
        eta_idx: cell.eta_idx,
        momentum_idx: cell.momentum_idx,
        fraction_idx: cell.fraction_idx,
        seed_idx,
        run_seed,
        train_losses: Vec::new(),
        val_losses: Vec::new(),
        min_val_loss: None,
        min_val_epoch: None,
        test_accuracy: 0.0,
        diverged: false,
        checkpoint: None,
        wall_seconds: 0.0,
    };

    let train = match subsample(
        &data.train,
        cell.fraction,
        subsample_seed(cfg.master_seed, cell.fraction_idx, seed_idx),
    ) {
        Ok(ds) => ds,
        Err(_) => {
            // degenerate split: keep the slot in the grid, flagged
            record.diverged = true;
            record.wall_seconds = started.elapsed().as_secs_f64();
            return record;
        }
    };

    let mut model = build_mnist_cnn(&mut init_rng);
    let mut optimizer = match cell.optimizer {
        OptimizerKind::Sgd => {
            Optimizer::Sgd(SgdState::new(cell.eta, cell.momentum, &model.params()))
        }
        OptimizerKind::Adam => {
            Optimizer::Adam(AdamState::new(cell.eta, cell.momentum, &model.params()))
        }
    };

    let mut best: Option<(f64, usize, Vec<Vec<f64>>)> = None;
    'epochs: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = normalize_to_pm1(&train, chunk);
            let labels = batch_labels(&train, chunk);
            let loss = model
                .loss_and_backward(&x, &labels, &mut dropout_rng, true)
                .expect("shapes fixed by model spec");
            if !loss.is_finite() || optimizer.step(&mut model).is_err() {
                record.diverged = true;
                break 'epochs;
            }
            loss_sum += loss * chunk.len() as f64;
        }
        record.train_losses.push(loss_sum / train.len() as f64);

        let vloss = eval_loss(&model, &data.val, cfg.batch_size);
        if !vloss.is_finite() {
            record.diverged = true;
            break;
        }
        record.val_losses.push(vloss);
        if best.as_ref().is_none_or(|(b, _, _)| vloss < *b) {
            best = Some((vloss, epoch, model.snapshot()));
        }
    }

    if let Some((vloss, epoch, snapshot)) = best {
        // the minimum over whatever epochs completed, diverged or not
        record.min_val_loss = Some(vloss);
        record.min_val_epoch = Some(epoch);
        if !record.diverged {
            model.restore(&snapshot);
            record.test_accuracy = accuracy(&model, &data.test, cfg.batch_size);
            if let Some(dir) = checkpoint_dir {
                let name = RunRecord::checkpoint_name(cell, seed_idx);
                if write_checkpoint(&dir.join(&name), &model_entries(&model)).is_ok() {
                    record.checkpoint = Some(name);
                }
            }
        }
        // diverged runs score as metric 0 for ranking and stay flagged
    }
    record.wall_seconds = started.elapsed().as_secs_f64();
    record
}

/// Every (cell, seed) task of a config, in deterministic order:
/// fraction-major, then eta, momentum, seed.
pub fn grid_tasks(cfg: &ExperimentConfig) -> Vec<(CellSpec, usize)> {
    let mut tasks = Vec::new();
    for (fraction_idx, &fraction) in cfg.fractions.iter().enumerate() {
        for (eta_idx, &eta) in cfg.eta_list.iter().enumerate() {
            for (momentum_idx, &momentum) in cfg.momentum_list.iter().enumerate() {
                for seed_idx in 0..cfg.seeds {
                    tasks.push((
                        CellSpec {
                            optimizer: cfg.optimizer,
                            eta,
                            momentum,
                            fraction,
                            eta_idx,
                            momentum_idx,
                            fraction_idx,
                        },
                        seed_idx,
                    ));
                }
            }
        }
    }
    tasks
}

/// Run every task on `workers` threads. The returned records are sorted in
/// task order, so the output is identical for any worker count.
pub fn run_grid(
    cfg: &ExperimentConfig,
    data: &SplitData,
    checkpoint_dir: Option<&Path>,
    workers: usize,
) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    let tasks = grid_tasks(cfg);
    let total = tasks.len();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, RunRecord)>> = Mutex::new(Vec::with_capacity(total));
    let workers = workers.max(1).min(total.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let (cell, seed_idx) = &tasks[i];
                let record = run_cell(cell, *seed_idx, cfg, data, checkpoint_dir);
                eprintln!(
                    "[{}/{}] {} eta={} momentum={} fraction={} seed={} -> acc={:.4}{} ({:.1}s)",
                    i + 1,
                    total,
                    record.optimizer,
                    record.eta,
                    record.momentum,
                    record.fraction,
                    record.seed_idx,
                    record.test_accuracy,
                    if record.diverged { " DIVERGED" } else { "" },
                    record.wall_seconds,
                );
                results.lock().unwrap().push((i, record));
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    Ok(results.into_iter().map(|(_, r)| r).collect())
}
