//! File emission: runs.jsonl, grid.csv and heatmap.svg.
//!
//! runs.jsonl is the canonical record stream and must be byte-identical for
//! identical configs, so nothing nondeterministic (timing, thread order) is
//! serialized. CSV floats are printed with 17 significant digits so a
//! re-read reproduces every f64 bit-exactly.

use super::records::GridSummary;
use super::run::RunRecord;
use super::svg::heatmap_svg;
use super::HarnessError;
use std::path::Path;

/// Format a float with 17 significant digits (lossless for f64).
fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn records_to_jsonl(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl(text: &str) -> Result<Vec<RunRecord>, HarnessError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(HarnessError::from))
        .collect()
}

pub fn load_records(runs_dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    read_jsonl(&std::fs::read_to_string(runs_dir.join("runs.jsonl"))?)
}

pub const CSV_HEADER: &str =
    "optimizer,eta,momentum,fraction,seed,min_val_loss,epoch_of_min,test_metric,diverged";

pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.optimizer,
            full_precision(r.eta),
            full_precision(r.momentum),
            full_precision(r.fraction),
            r.seed_idx,
            r.min_val_loss.map(full_precision).unwrap_or_default(),
            r.min_val_epoch.map(|e| e.to_string()).unwrap_or_default(),
            full_precision(r.test_accuracy),
            r.diverged,
        ));
    }
    out
}

/// Heatmap for one (optimizer, fraction) sub-grid: the first optimizer in
/// enum order present in the records, at the first configured fraction
/// present. Top-10 and best are recomputed within that sub-grid.
pub fn heatmap_for_records(summary: &GridSummary) -> Result<String, HarnessError> {
    let optimizer = summary
        .cells
        .iter()
        .map(|c| c.optimizer)
        .min()
        .ok_or_else(|| HarnessError::InsufficientData("no cells to plot".into()))?;
    let fraction_idx = summary
        .cells
        .iter()
        .filter(|c| c.optimizer == optimizer)
        .map(|c| c.fraction_idx)
        .min()
        .expect("optimizer has cells");
    let sub: Vec<&super::records::CellSummary> = summary
        .cells
        .iter()
        .filter(|c| c.optimizer == optimizer && c.fraction_idx == fraction_idx)
        .collect();

    let mut eta_axis: Vec<(usize, f64)> = sub.iter().map(|c| (c.eta_idx, c.eta)).collect();
    eta_axis.sort_by_key(|&(i, _)| i);
    eta_axis.dedup();
    let mut momentum_axis: Vec<(usize, f64)> =
        sub.iter().map(|c| (c.momentum_idx, c.momentum)).collect();
    momentum_axis.sort_by_key(|&(i, _)| i);
    momentum_axis.dedup();

    let pos = |eta_idx: usize, momentum_idx: usize| -> (usize, usize) {
        (
            eta_axis.iter().position(|&(i, _)| i == eta_idx).unwrap(),
            momentum_axis
                .iter()
                .position(|&(i, _)| i == momentum_idx)
                .unwrap(),
        )
    };

    let mut means = vec![vec![None; momentum_axis.len()]; eta_axis.len()];
    let mut cell_means = Vec::with_capacity(sub.len());
    for c in &sub {
        let (e, m) = pos(c.eta_idx, c.momentum_idx);
        means[e][m] = Some(c.mean_metric);
        cell_means.push(((e, m), c.mean_metric));
    }
    cell_means.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top: Vec<(usize, usize)> = cell_means.iter().take(10).map(|&(p, _)| p).collect();
    let best = cell_means.first().map(|&(p, _)| p);

    let fraction = sub[0].fraction;
    Ok(heatmap_svg(
        &format!("mean test metric, {optimizer}, fraction {fraction}"),
        &eta_axis.iter().map(|&(_, v)| v).collect::<Vec<_>>(),
        &momentum_axis.iter().map(|&(_, v)| v).collect::<Vec<_>>(),
        &means,
        &top,
        best,
    ))
}

/// Write runs.jsonl, grid.csv and heatmap.svg into `out_dir`.
pub fn emit_reports(
    records: &[RunRecord],
    summary: &GridSummary,
    out_dir: &Path,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("runs.jsonl"), records_to_jsonl(records))?;
    std::fs::write(out_dir.join("grid.csv"), records_to_csv(records))?;
    std::fs::write(out_dir.join("heatmap.svg"), heatmap_for_records(summary)?)?;
    Ok(())
}
