//! Aggregation over run records: per-cell means, top-10 selection, best-run
//! picks, convergence epochs and noise robustness.

use super::config::{OptimizerKind, PROPOSED_ETA, PROPOSED_MOMENTUM};
use super::run::{accuracy, RunRecord};
use super::HarnessError;
use crate::data::noise::apply_noise;
use crate::data::{Dataset, NoiseSpec};
use crate::nn::checkpoint::{load_into_model, read_checkpoint};
use crate::nn::model::build_mnist_cnn;
use crate::rng::{derive_seed, Rng};
use crate::stats::{top_k_mean, wilcoxon_signed_rank, StatsError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Mean metric of one grid cell across its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub optimizer: OptimizerKind,
    pub fraction: f64,
    pub fraction_idx: usize,
    pub eta: f64,
    pub eta_idx: usize,
    pub momentum: f64,
    pub momentum_idx: usize,
    pub mean_metric: f64,
    /// Per-seed metrics in seed order (diverged runs contribute 0).
    pub per_seed: Vec<f64>,
}

/// Wilcoxon comparison of the proposed (0.016, 0.874) cell against another
/// top cell; `p_value` is None when every paired difference is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedComparison {
    pub cell: usize,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub cells: Vec<CellSummary>,
    /// Cell indices, best mean first.
    pub ranking: Vec<usize>,
    /// The min(10, cells) best cells.
    pub top: Vec<usize>,
    pub best: usize,
    /// Present when the proposed pair is part of the grid.
    pub proposed_cell: Option<usize>,
    pub proposed_vs_top: Vec<ProposedComparison>,
}

impl GridSummary {
    pub fn from_records(records: &[RunRecord]) -> Result<GridSummary, HarnessError> {
        if records.is_empty() {
            return Err(HarnessError::InsufficientData("no records".into()));
        }
        let mut groups: BTreeMap<(OptimizerKind, usize, usize, usize), Vec<&RunRecord>> =
            BTreeMap::new();
        for r in records {
            groups
                .entry((r.optimizer, r.fraction_idx, r.eta_idx, r.momentum_idx))
                .or_default()
                .push(r);
        }
        let mut cells = Vec::with_capacity(groups.len());
        for ((optimizer, fraction_idx, eta_idx, momentum_idx), mut rs) in groups {
            rs.sort_by_key(|r| r.seed_idx);
            let per_seed: Vec<f64> = rs.iter().map(|r| r.test_accuracy).collect();
            let mean_metric = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
            cells.push(CellSummary {
                optimizer,
                fraction: rs[0].fraction,
                fraction_idx,
                eta: rs[0].eta,
                eta_idx,
                momentum: rs[0].momentum,
                momentum_idx,
                mean_metric,
                per_seed,
            });
        }
        let means: Vec<f64> = cells.iter().map(|c| c.mean_metric).collect();
        let k = means.len().min(10);
        let summary = top_k_mean(&means, k).map_err(HarnessError::Stats)?;
        let ranking = summary.ranking.clone();
        let top: Vec<usize> = ranking[..k].to_vec();
        let best = top[0];

        let proposed_cell = cells
            .iter()
            .position(|c| c.eta == PROPOSED_ETA && c.momentum == PROPOSED_MOMENTUM);
        let mut proposed_vs_top = Vec::new();
        if let Some(p) = proposed_cell {
            for &other in &top {
                if other == p
                    || cells[other].optimizer != cells[p].optimizer
                    || cells[other].fraction_idx != cells[p].fraction_idx
                {
                    continue;
                }
                let p_value =
                    match wilcoxon_signed_rank(&cells[p].per_seed, &cells[other].per_seed, true) {
                        Ok(r) => Some(r.p_value),
                        Err(StatsError::UndefinedTest) => None,
                        Err(e) => return Err(HarnessError::Stats(e)),
                    };
                proposed_vs_top.push(ProposedComparison {
                    cell: other,
                    p_value,
                });
            }
        }

        Ok(GridSummary {
            cells,
            ranking,
            top,
            best,
            proposed_cell,
            proposed_vs_top,
        })
    }
}

/// The non-diverged record with the smallest min validation loss. Ties
/// break toward higher test metric, then lower eta index.
pub fn select_best_by_val_loss(records: &[RunRecord]) -> Result<&RunRecord, HarnessError> {
    records
        .iter()
        .filter(|r| !r.diverged && r.min_val_loss.is_some())
        .min_by(|a, b| {
            a.min_val_loss
                .unwrap()
                .total_cmp(&b.min_val_loss.unwrap())
                .then(b.test_accuracy.total_cmp(&a.test_accuracy))
                .then(a.eta_idx.cmp(&b.eta_idx))
        })
        .ok_or_else(|| HarnessError::NoCandidate("every record diverged".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub rank: usize,
    pub optimizer: OptimizerKind,
    pub eta: f64,
    pub momentum: f64,
    pub min_val_loss: f64,
    pub epoch_of_min: usize,
    pub test_accuracy: f64,
}

/// Top models by test metric with the epoch at which each reached its
/// minimum validation loss, plus the per-optimizer mean of that epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub mean_epoch_sgd: Option<f64>,
    pub mean_epoch_adam: Option<f64>,
}

pub fn convergence_report(
    records: &[RunRecord],
    top_n: usize,
) -> Result<ConvergenceReport, HarnessError> {
    let mut usable: Vec<&RunRecord> = records
        .iter()
        .filter(|r| !r.diverged && r.min_val_loss.is_some())
        .collect();
    if usable.len() < top_n {
        return Err(HarnessError::InsufficientData(format!(
            "need {top_n} non-diverged records, have {}",
            usable.len()
        )));
    }
    usable.sort_by(|a, b| b.test_accuracy.total_cmp(&a.test_accuracy));
    let rows: Vec<ConvergenceRow> = usable[..top_n]
        .iter()
        .enumerate()
        .map(|(i, r)| ConvergenceRow {
            rank: i + 1,
            optimizer: r.optimizer,
            eta: r.eta,
            momentum: r.momentum,
            min_val_loss: r.min_val_loss.unwrap(),
            epoch_of_min: r.min_val_epoch.unwrap(),
            test_accuracy: r.test_accuracy,
        })
        .collect();

    let mean_epoch = |kind: OptimizerKind| -> Option<f64> {
        let epochs: Vec<f64> = usable
            .iter()
            .filter(|r| r.optimizer == kind)
            .take(top_n)
            .map(|r| r.min_val_epoch.unwrap() as f64)
            .collect();
        if epochs.is_empty() {
            None
        } else {
            Some(epochs.iter().sum::<f64>() / epochs.len() as f64)
        }
    };

    Ok(ConvergenceReport {
        rows,
        mean_epoch_sgd: mean_epoch(OptimizerKind::Sgd),
        mean_epoch_adam: mean_epoch(OptimizerKind::Adam),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseLevelResult {
    pub percent: f64,
    pub mean_error: f64,
    pub models: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseOptimizerSeries {
    pub optimizer: OptimizerKind,
    pub levels: Vec<NoiseLevelResult>,
}

/// Mean error (1 − accuracy) of the top models per optimizer under
/// increasing pixel-flip noise on the test split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub seed: u64,
    pub top_k: usize,
    pub series: Vec<NoiseOptimizerSeries>,
    /// Records skipped because their checkpoint was missing.
    pub skipped: Vec<String>,
}

/// Evaluate checkpointed top models on noised test sets. Models missing a
/// checkpoint are skipped with a note; every level of one evaluation shares
/// the same noised dataset.
pub fn noise_eval(
    records: &[RunRecord],
    runs_dir: &Path,
    test: &Dataset,
    levels: &[f64],
    seed: u64,
    top_k: usize,
    batch_size: usize,
) -> Result<NoiseReport, HarnessError> {
    let mut skipped = Vec::new();
    let mut series = Vec::new();
    for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
        let mut candidates: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.optimizer == kind && !r.diverged)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_by(|a, b| b.test_accuracy.total_cmp(&a.test_accuracy));
        candidates.truncate(top_k);

        let mut models = Vec::new();
        for r in &candidates {
            let Some(name) = &r.checkpoint else {
                skipped.push(format!("{kind} seed {} has no checkpoint", r.seed_idx));
                continue;
            };
            match read_checkpoint(&runs_dir.join(name)) {
                Ok(entries) => {
                    let mut model = build_mnist_cnn(&mut Rng::new(0));
                    load_into_model(&mut model, &entries)?;
                    models.push(model);
                }
                Err(e) => skipped.push(format!("{name}: {e}")),
            }
        }
        if models.is_empty() {
            skipped.push(format!("{kind}: no checkpoints available"));
            continue;
        }

        let mut level_results = Vec::new();
        for (li, &percent) in levels.iter().enumerate() {
            let spec = NoiseSpec::pixel_flip(percent, derive_seed(seed, li as u64));
            let noised = apply_noise(test, &spec)?;
            let mean_error = models
                .iter()
                .map(|m| 1.0 - accuracy(m, &noised, batch_size))
                .sum::<f64>()
                / models.len() as f64;
            level_results.push(NoiseLevelResult {
                percent,
                mean_error,
                models: models.len(),
            });
        }
        series.push(NoiseOptimizerSeries {
            optimizer: kind,
            levels: level_results,
        });
    }
    if series.is_empty() {
        return Err(HarnessError::NoCandidate(
            "no checkpointed, non-diverged records to evaluate".into(),
        ));
    }
    Ok(NoiseReport {
        seed,
        top_k,
        series,
        skipped,
    })
}
