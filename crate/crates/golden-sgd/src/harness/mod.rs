//! Grid-search orchestration: configs, runs, aggregation and report files.

pub mod config;
pub mod records;
pub mod reports;
pub mod run;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Checkpoint(#[from] crate::nn::checkpoint::CheckpointError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no candidate: {0}")]
    NoCandidate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub use config::{
    resolve_dataset, DataSource, DatasetConfig, ExperimentConfig, OptimizerKind, SplitData,
    DATA_ENV_VAR, PROPOSED_ETA, PROPOSED_MOMENTUM,
};
pub use records::{
    convergence_report, noise_eval, select_best_by_val_loss, ConvergenceReport, GridSummary,
    NoiseReport,
};
pub use reports::{emit_reports, load_records, read_jsonl, records_to_csv, records_to_jsonl};
pub use run::{accuracy, eval_loss, grid_tasks, run_cell, run_grid, CellSpec, RunRecord};
