//! Command-line front end for the optimizer laboratory.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use golden_sgd::bayes::DerivedConstants;
use golden_sgd::data::idx::write_idx_images;
use golden_sgd::data::noise::{apply_noise, write_noise_manifest};
use golden_sgd::data::NoiseSpec;
use golden_sgd::harness::{
    convergence_report, emit_reports, grid_tasks, load_records, noise_eval, reports,
    resolve_dataset, run_cell, run_grid, select_best_by_val_loss, DataSource,
    ExperimentConfig, GridSummary, DATA_ENV_VAR,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "golden-sgd",
    about = "Grid-search laboratory for SGD with derived hyperparameters (eta 0.016, momentum 0.874)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print golden ratio, momentum weight and learning rate.
    Constants,
    /// Train one run: the first (eta, momentum, fraction) of the config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Seed index (default 0).
        #[arg(long)]
        seed: Option<usize>,
    },
    /// Run the whole grid and write runs.jsonl, grid.csv, heatmap.svg and
    /// per-run checkpoints into the output directory.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Evaluate the top checkpointed models under pixel-flip noise.
    NoiseEval {
        /// Directory produced by `grid`.
        #[arg(long)]
        runs: PathBuf,
        /// Noise percentages, e.g. 0,5,10 (default: the config's levels).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Noise seed (default: the config's master seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize a runs directory: best run, convergence epochs, top-10
    /// statistics and Wilcoxon comparisons.
    Report {
        #[arg(long)]
        runs: PathBuf,
    },
    /// Render the grid heatmap from a runs directory.
    Plot {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Constants => constants(),
        Command::Train { config, seed } => train(&config, seed.unwrap_or(0)),
        Command::Grid {
            config,
            out,
            workers,
        } => grid(&config, &out, workers),
        Command::NoiseEval { runs, levels, seed } => noise(&runs, levels, seed),
        Command::Report { runs } => report(&runs),
        Command::Plot { runs, out } => plot(&runs, &out),
    }
}

fn constants() -> Result<()> {
    let c = DerivedConstants::compute();
    println!("constant  value");
    println!("golden    {:.17e}", c.golden);
    println!("alpha     {:.17e}", c.alpha);
    println!("eta       {:.17e}", c.eta);
    println!(
        "{{\"golden\":{},\"alpha\":{},\"eta\":{}}}",
        serde_json::to_string(&c.golden)?,
        serde_json::to_string(&c.alpha)?,
        serde_json::to_string(&c.eta)?
    );
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn resolve_with_notice(cfg: &ExperimentConfig) -> Result<golden_sgd::harness::SplitData> {
    let data = resolve_dataset(cfg)?;
    if data.source_note == "synthetic" && cfg.dataset.source == DataSource::Auto {
        eprintln!(
            "note: no IDX dataset found ({DATA_ENV_VAR} unset or files missing); \
             using the synthetic glyph fallback"
        );
    }
    Ok(data)
}

fn train(config: &Path, seed_idx: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let data = resolve_with_notice(&cfg)?;
    let Some((cell, _)) = grid_tasks(&cfg).into_iter().next() else {
        bail!("config produces an empty grid");
    };
    eprintln!(
        "training {} eta={} momentum={} fraction={} seed={} on {} data",
        cell.optimizer, cell.eta, cell.momentum, cell.fraction, seed_idx, data.source_note
    );
    let record = run_cell(&cell, seed_idx, &cfg, &data, None);
    eprintln!(
        "min val loss {:?} at epoch {:?}, test accuracy {:.4}{} ({:.1}s)",
        record.min_val_loss,
        record.min_val_epoch,
        record.test_accuracy,
        if record.diverged { " DIVERGED" } else { "" },
        record.wall_seconds
    );
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn grid(config: &Path, out: &Path, workers: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let data = resolve_with_notice(&cfg)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), cfg.to_json_pretty())?;
    let records = run_grid(&cfg, &data, Some(out), workers)?;
    let summary = GridSummary::from_records(&records)?;
    emit_reports(&records, &summary, out)?;
    print_summary(&summary);
    eprintln!("wrote {}", out.join("runs.jsonl").display());
    Ok(())
}

fn print_summary(summary: &GridSummary) {
    println!("top cells by mean test metric:");
    for (rank, &ci) in summary.top.iter().enumerate() {
        let c = &summary.cells[ci];
        println!(
            "  {:>2}. {} eta={:<7} momentum={:<6} fraction={:<5} mean={:.4}",
            rank + 1,
            c.optimizer,
            c.eta,
            c.momentum,
            c.fraction,
            c.mean_metric
        );
    }
    let best = &summary.cells[summary.best];
    println!(
        "best cell: {} eta={} momentum={} fraction={} mean={:.4}",
        best.optimizer, best.eta, best.momentum, best.fraction, best.mean_metric
    );
    if let Some(p) = summary.proposed_cell {
        println!(
            "proposed cell (eta=0.016, momentum=0.874) mean: {:.4}",
            summary.cells[p].mean_metric
        );
        for cmp in &summary.proposed_vs_top {
            let c = &summary.cells[cmp.cell];
            match cmp.p_value {
                Some(p) => println!(
                    "  vs eta={:<7} momentum={:<6}: two-sided Wilcoxon p = {:.4}",
                    c.eta, c.momentum, p
                ),
                None => println!(
                    "  vs eta={:<7} momentum={:<6}: identical per-seed metrics (test undefined)",
                    c.eta, c.momentum
                ),
            }
        }
    }
}

fn noise(runs: &Path, levels: Option<Vec<f64>>, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(&runs.join("config.json"))
        .context("runs directory is missing config.json (produced by `grid`)")?;
    let levels = levels.unwrap_or_else(|| cfg.noise_levels.clone());
    let levels = levels.as_slice();
    if levels.is_empty() {
        bail!("no noise levels given and the config lists none");
    }
    let records = load_records(runs)?;
    let data = resolve_with_notice(&cfg)?;
    let seed = seed.unwrap_or(cfg.master_seed);
    let report = noise_eval(&records, runs, &data.test, levels, seed, 10, cfg.batch_size)?;

    // audit trail: a few noised test images per level, with their manifest
    for (li, &percent) in levels.iter().enumerate() {
        let spec = NoiseSpec::pixel_flip(percent, golden_sgd::rng::derive_seed(seed, li as u64));
        let noised = apply_noise(&data.test, &spec)?;
        let dir = runs.join("noise").join(format!("level-{percent}"));
        std::fs::create_dir_all(&dir)?;
        let sample: Vec<_> = noised.images.iter().take(16).cloned().collect();
        std::fs::write(dir.join("sample-images-idx3-ubyte"), write_idx_images(&sample))?;
        write_noise_manifest(&dir, &spec)?;
    }

    println!("noise robustness (error = 1 - accuracy, mean over top {} models)", report.top_k);
    println!("note: pixel sets are sampled independently per test image");
    for series in &report.series {
        println!("  {}:", series.optimizer);
        for level in &series.levels {
            println!(
                "    {:>5.1}% noise -> mean error {:.4} ({} models)",
                level.percent, level.mean_error, level.models
            );
        }
    }
    for s in &report.skipped {
        eprintln!("warning: skipped {s}");
    }
    std::fs::write(
        runs.join("noise_eval.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    Ok(())
}

fn report(runs: &Path) -> Result<()> {
    let records = load_records(runs)?;
    println!("report over {} runs", records.len());
    println!("validation loss: sample-mean over the full validation split");
    println!("noise pixel sets: sampled independently per test image");

    match select_best_by_val_loss(&records) {
        Ok(best) => println!(
            "best by validation loss: {} eta={} momentum={} fraction={} seed={} \
             (val loss {:.6} at epoch {}, test {:.4})",
            best.optimizer,
            best.eta,
            best.momentum,
            best.fraction,
            best.seed_idx,
            best.min_val_loss.unwrap(),
            best.min_val_epoch.unwrap(),
            best.test_accuracy
        ),
        Err(e) => println!("best by validation loss: {e}"),
    }

    let top_n = 5.min(records.iter().filter(|r| !r.diverged).count());
    if top_n > 0 {
        let conv = convergence_report(&records, top_n)?;
        println!("convergence (top {top_n} by test metric):");
        println!("  rank  optimizer  eta      momentum  min val loss  epoch  test");
        for row in &conv.rows {
            println!(
                "  {:>4}  {:<9}  {:<7}  {:<8}  {:<12.6}  {:>5}  {:.4}",
                row.rank,
                row.optimizer.to_string(),
                row.eta,
                row.momentum,
                row.min_val_loss,
                row.epoch_of_min,
                row.test_accuracy
            );
        }
        match (conv.mean_epoch_sgd, conv.mean_epoch_adam) {
            (Some(s), Some(a)) => println!(
                "mean epoch of min validation loss: sgd {s:.2}, adam {a:.2}"
            ),
            (Some(s), None) => println!("mean epoch of min validation loss: sgd {s:.2}"),
            (None, Some(a)) => println!("mean epoch of min validation loss: adam {a:.2}"),
            (None, None) => {}
        }
    }

    let summary = GridSummary::from_records(&records)?;
    let means: Vec<f64> = summary.top.iter().map(|&i| summary.cells[i].mean_metric).collect();
    let k = means.len();
    let top_stats = golden_sgd::stats::top_k_mean(&means, k)?;
    println!(
        "top-{k} cells: mean metric {:.4} ± {:.4} (population std)",
        top_stats.mean, top_stats.std
    );
    print_summary(&summary);
    Ok(())
}

fn plot(runs: &Path, out: &Path) -> Result<()> {
    let records = load_records(runs)?;
    let summary = GridSummary::from_records(&records)?;
    let svg = reports::heatmap_for_records(&summary)?;
    std::fs::write(out, svg)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
